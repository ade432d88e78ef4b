#pragma once

#include <cstdint>
#include <vector>

#include "lcm/image.hpp"

namespace lcm {

enum class Backend { Serial, OpenMP };

// Rasterized footprint of one ArtMesh, cropped to its canvas bounding box.
// `color` is bilinear-sampled straight RGBA with opacity folded into alpha;
// `mask_alpha` is the nearest-sampled alpha times opacity used for masks.
struct MeshRaster {
  int mesh_id = 0;
  Rect bbox;
  std::vector<std::uint8_t> coverage;
  std::vector<Rgba> color;
  std::vector<float> mask_alpha;

  std::size_t offset(int x, int y) const noexcept {
    return static_cast<std::size_t>(y - bbox.y0) * bbox.width() + (x - bbox.x0);
  }
  bool covers(int x, int y) const noexcept { return bbox.contains(x, y) && coverage[offset(x, y)] != 0; }
  Rgba color_at(int x, int y) const noexcept { return bbox.contains(x, y) ? color[offset(x, y)] : Rgba{}; }
  float mask_alpha_at(int x, int y) const noexcept {
    return bbox.contains(x, y) ? mask_alpha[offset(x, y)] : 0.f;
  }
};

// Canvas-sized binary mask stored cropped to the owning mesh's bbox.
struct VisibilityMask {
  int mesh_id = 0;
  int width = 0;
  int height = 0;
  Rect bbox;
  std::vector<std::uint8_t> bits;

  bool contains(int x, int y) const noexcept {
    return bbox.contains(x, y) &&
           bits[static_cast<std::size_t>(y - bbox.y0) * bbox.width() + (x - bbox.x0)] != 0;
  }
  std::size_t count() const noexcept {
    std::size_t n = 0;
    for (auto b : bits) n += b != 0;
    return n;
  }
  Mask to_mask() const;

  bool operator==(const VisibilityMask&) const = default;
};

inline Mask VisibilityMask::to_mask() const {
  Mask m(width, height, 0);
  for (int y = bbox.y0; y < bbox.y1; ++y)
    for (int x = bbox.x0; x < bbox.x1; ++x) m(x, y) = contains(x, y) ? 1 : 0;
  return m;
}

}  // namespace lcm
