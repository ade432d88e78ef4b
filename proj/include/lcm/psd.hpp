#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lcm/depth.hpp"
#include "lcm/image.hpp"
#include "lcm/layers.hpp"

namespace lcm {

class Scene;

inline constexpr std::size_t kMaxPsdLayers = 999;

struct PsdLayer {
  std::string name;
  RGBAImage image;
  double depth = 0.0;  // representative depth; larger is nearer the viewer
};

// Median of depth values where both `region` and the map are valid; 0 when
// there are none.
double median_depth(const PseudoDepthMap& depth_map, const Mask& region);

// Stable sort bottom-to-top by representative depth.
void sort_psd_layers(std::vector<PsdLayer>& layers);

// Builds the export stack from class layers. Classes with a Strata entry are
// replaced by their stratum sublayers ("<class>_back" / "<class>_front", or
// "<class>_s<i>" for k > 2); back strata are hole-filled where nearer strata
// cover them. Layers with empty alpha are dropped.
std::vector<PsdLayer> build_psd_stack(const Scene& scene, std::span<const SemanticLayer> layers,
                                      std::span<const PseudoDepthMap> depth_maps, std::span<const Strata> strata);

// Run-length ("PackBits") encoding of one scanline.
std::vector<std::uint8_t> packbits_encode(std::span<const std::uint8_t> row);

// PSD v1, RGB, 8 bits per channel, RLE compressed. Layers are written in the
// given order (first = bottom). Throws InvalidArgument on an empty stack and
// TooManyLayers above kMaxPsdLayers.
std::vector<std::uint8_t> encode_psd(std::span<const PsdLayer> layers, int width, int height);

// Sorts by depth, encodes, and writes. Throws IoFailure on write errors.
void export_psd(std::vector<PsdLayer> layers, int width, int height, const std::filesystem::path& path);

}  // namespace lcm
