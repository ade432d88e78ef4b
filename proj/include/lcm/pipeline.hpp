#pragma once

#include <cstdint>
#include <vector>

#include "lcm/depth.hpp"
#include "lcm/labeler.hpp"
#include "lcm/layers.hpp"
#include "lcm/psd.hpp"
#include "lcm/raster.hpp"

namespace lcm {

struct PipelineOptions {
  double tau_vis = kDefaultTauVis;
  double tau_bg = kDefaultTauBg;
  int k = 2;
  std::uint64_t seed = 0;
  StratifyMode mode = StratifyMode::Pixel;
  bool stratify = true;
};

// Per-class layers for every class that owns at least one mesh, in taxonomy
// order, with their class depth maps and strata for stratified classes.
struct LayerSet {
  std::vector<SemanticLayer> layers;
  std::vector<PseudoDepthMap> depth_maps;
  std::vector<Strata> strata;
};

// `scene` must be built over a model whose mesh labels are final.
LayerSet compute_layers(const Scene& scene, const PipelineOptions& options = {});

std::vector<PsdLayer> psd_stack(const Scene& scene, const LayerSet& set);

}  // namespace lcm
