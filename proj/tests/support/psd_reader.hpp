#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lcm/image.hpp"

namespace lcm::fx {

// Minimal PSD v1 reader written against the published file layout, used to
// check the writer without sharing any of its code.
struct PsdReadLayer {
  std::string name;
  Rect bounds;
  Plane<Rgba8> pixels;  // canvas-sized, zero outside bounds
  std::string blend;
  int opacity = 0;
};

struct PsdReadFile {
  int width = 0;
  int height = 0;
  int channels = 0;
  int depth = 0;
  int color_mode = 0;
  bool merged_alpha_is_transparency = false;
  std::vector<PsdReadLayer> layers;  // bottom first
  Plane<Rgba8> merged;
};

PsdReadFile read_psd(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> packbits_decode(std::span<const std::uint8_t> data, std::size_t expected);

}  // namespace lcm::fx
