#include "lcm/pipeline.hpp"

#include <algorithm>

namespace lcm {

LayerSet compute_layers(const Scene& scene, const PipelineOptions& options) {
  const auto& model = scene.model();
  LayerSet set;
  for (std::size_t c = 0; c < model.taxonomy.size(); ++c) {
    const auto cls = static_cast<ClassId>(c);
    if (scene.paint_order_of_class(cls).empty()) continue;
    auto layer = extract_layer(scene, cls);
    auto depth = render_depth_map(scene, cls);
    if (options.stratify && model.taxonomy.is_stratified(cls)) {
      Mask alpha(scene.width(), scene.height(), 0);
      for (std::size_t p = 0; p < alpha.size(); ++p) alpha.data()[p] = layer.image.data()[p].a > 0.f;
      if (count_set(alpha) > 0)
        set.strata.push_back(stratify_layer(scene, cls, depth, alpha, {options.k, options.mode, options.seed}));
    }
    set.layers.push_back(std::move(layer));
    set.depth_maps.push_back(std::move(depth));
  }
  return set;
}

std::vector<PsdLayer> psd_stack(const Scene& scene, const LayerSet& set) {
  return build_psd_stack(scene, set.layers, set.depth_maps, set.strata);
}

}  // namespace lcm
