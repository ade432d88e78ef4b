#pragma once

#include <span>
#include <vector>

#include "lcm/depth.hpp"
#include "lcm/image.hpp"
#include "lcm/model.hpp"

namespace lcm {

class Scene;

struct SemanticLayer {
  ClassId cls = kUnlabeled;
  RGBAImage image;  // rgb + alpha, including content hidden in the full render
  RGBImage padded;  // rgb extended into transparent pixels
  bool padded_fallback = false;  // layer was fully transparent; padded is mid-gray
};

struct PadResult {
  RGBImage rgb;
  bool all_transparent = false;
};

// Iterative Gaussian padding with sigma = 1, 2, 4, ... until every pixel is
// filled. Pixels with alpha > 0 keep their rgb exactly.
PadResult pad_gaussian(const RGBAImage& layer);

inline constexpr double kPadCoverage = 1e-4;

// Composite of only the meshes labeled `cls`, back to front.
SemanticLayer extract_layer(const Scene& scene, ClassId cls);
SemanticLayer extract_layer(const CharacterModel& model, ClassId cls);

// Per pixel, layers ordered by their depth at that pixel (invalid = absent)
// and composited back to front. depth_maps[i] belongs to layers[i].
RGBAImage reconstruct(std::span<const SemanticLayer> layers, std::span<const PseudoDepthMap> depth_maps);

}  // namespace lcm
