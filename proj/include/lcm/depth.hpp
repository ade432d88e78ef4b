#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "lcm/image.hpp"
#include "lcm/model.hpp"

namespace lcm {

class Scene;

inline constexpr float kInvalidDepth = -1.f;

struct PseudoDepthMap {
  FloatPlane depth;  // [0,1] where valid, kInvalidDepth elsewhere
  Mask valid;
};

// Min-max normalized draw order per mesh id. A single-mesh model maps to 0.
std::map<int, double> pseudo_depth(const CharacterModel& model);

// Depth of the topmost contributing mesh per pixel, optionally restricted to
// meshes labeled `cls`.
PseudoDepthMap render_depth_map(const Scene& scene, std::optional<ClassId> cls = std::nullopt);
PseudoDepthMap render_depth_map(const CharacterModel& model, std::optional<ClassId> cls = std::nullopt);

struct KMeansResult {
  std::vector<double> centroids;          // ascending
  std::vector<std::uint8_t> assignments;  // cluster index per input value
  double objective = 0.0;                 // within-cluster sum of squares
  int iterations = 0;
};

double within_cluster_ss(std::span<const double> values, std::span<const std::uint8_t> assignments);

// Two-cluster 1-D k-means, initialized at (min, max). Throws DegenerateInput
// when fewer than two values or all values are equal. `seed` is accepted for
// interface symmetry with kmeans_1d; this path is fully deterministic.
KMeansResult kmeans2_1d(std::span<const double> values, std::uint64_t seed = 0);

// General k. k == 2 delegates to kmeans2_1d; larger k uses seeded k-means++
// initialization followed by Lloyd iterations.
KMeansResult kmeans_1d(std::span<const double> values, int k, std::uint64_t seed = 0);

enum class StratifyMode { Pixel, Mesh };

// Strata are numbered 1..k from back to front in `assignments` (0 = outside).
struct Strata {
  ClassId cls = kUnlabeled;
  bool split = false;  // false when clustering was degenerate (single stratum)
  std::vector<double> centroids;
  Plane<std::uint8_t> assignments;
  Mask hole_mask;                 // back-stratum content lying under a nearer stratum
  std::map<int, int> mesh_strata;  // mesh id -> stratum (1..k)

  int k() const noexcept { return static_cast<int>(centroids.size()); }
};

inline constexpr std::uint8_t kStratumBack = 1;
inline constexpr std::uint8_t kStratumFront = 2;

struct StratifyOptions {
  int k = 2;
  StratifyMode mode = StratifyMode::Pixel;
  std::uint64_t seed = 0;
};

Strata stratify_layer(const Scene& scene, ClassId cls, const PseudoDepthMap& depth_map, const Mask& alpha,
                      const StratifyOptions& options = {});

// Push-pull fill of hole pixels; every other pixel is returned bit-exactly.
RGBAImage fill_holes(const RGBAImage& layer, const Mask& hole_mask);

// 16-bit PNG quantization: round(d * 65535) half-up, invalid = 0.
Plane<std::uint16_t> quantize_depth(const PseudoDepthMap& map);
std::vector<std::uint8_t> depth_to_tensor(const PseudoDepthMap& map);
PseudoDepthMap depth_from_tensor(std::span<const std::uint8_t> bytes);

}  // namespace lcm
