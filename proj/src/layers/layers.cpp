#include "lcm/layers.hpp"

#include <algorithm>

#include "lcm/errors.hpp"
#include "lcm/kernels.hpp"
#include "lcm/raster.hpp"

namespace lcm {

PadResult pad_gaussian(const RGBAImage& layer) {
  const int w = layer.width(), h = layer.height();
  PadResult out{RGBImage(w, h), false};

  std::array<FloatPlane, 4> premul{FloatPlane(w, h), FloatPlane(w, h), FloatPlane(w, h), FloatPlane(w, h)};
  Mask filled(w, h, 0);
  std::size_t remaining = layer.size();
  for (std::size_t p = 0; p < layer.size(); ++p) {
    const Rgba& c = layer.data()[p];
    if (c.a <= 0.f) continue;
    out.rgb.data()[p] = {c.r, c.g, c.b};
    filled.data()[p] = 1;
    --remaining;
    premul[0].data()[p] = c.r * c.a;
    premul[1].data()[p] = c.g * c.a;
    premul[2].data()[p] = c.b * c.a;
    premul[3].data()[p] = c.a;
  }
  if (remaining == layer.size()) {
    std::fill(out.rgb.data().begin(), out.rgb.data().end(), Rgb{0.5f, 0.5f, 0.5f});
    out.all_transparent = true;
    return out;
  }

  const int max_dim = std::max(w, h);
  for (int sigma = 1; remaining > 0; sigma = std::min(2 * sigma, max_dim)) {
    auto blurred = premul;
    for (auto& plane : blurred) kernels::gaussian_blur(plane, sigma, kernels::default_backend());
    for (std::size_t p = 0; p < layer.size(); ++p) {
      if (filled.data()[p]) continue;
      const float a = blurred[3].data()[p];
      if (a < kPadCoverage) continue;
      out.rgb.data()[p] = {std::clamp(blurred[0].data()[p] / a, 0.f, 1.f),
                           std::clamp(blurred[1].data()[p] / a, 0.f, 1.f),
                           std::clamp(blurred[2].data()[p] / a, 0.f, 1.f)};
      filled.data()[p] = 1;
      --remaining;
    }
    if (sigma >= max_dim) break;
  }

  if (remaining > 0) {
    // Truncated kernels never reached these pixels: use the global mean.
    double sum[4] = {0, 0, 0, 0};
    for (std::size_t p = 0; p < layer.size(); ++p)
      for (int c = 0; c < 4; ++c) sum[c] += premul[c].data()[p];
    const Rgb mean{static_cast<float>(sum[0] / sum[3]), static_cast<float>(sum[1] / sum[3]),
                   static_cast<float>(sum[2] / sum[3])};
    for (std::size_t p = 0; p < layer.size(); ++p)
      if (!filled.data()[p]) out.rgb.data()[p] = mean;
  }
  return out;
}

SemanticLayer extract_layer(const Scene& scene, ClassId cls) {
  if (!scene.model().taxonomy.valid(cls)) fail(ErrorCode::UnknownClass, "class index out of range");
  SemanticLayer layer;
  layer.cls = cls;
  const auto order = scene.paint_order_of_class(cls);
  layer.image = kernels::composite(scene.width(), scene.height(), scene.rasters(), order, scene.backend());
  auto pad = pad_gaussian(layer.image);
  layer.padded = std::move(pad.rgb);
  layer.padded_fallback = pad.all_transparent;
  return layer;
}

SemanticLayer extract_layer(const CharacterModel& model, ClassId cls) {
  const Scene scene(model);
  return extract_layer(scene, cls);
}

RGBAImage reconstruct(std::span<const SemanticLayer> layers, std::span<const PseudoDepthMap> depth_maps) {
  if (layers.size() != depth_maps.size()) fail(ErrorCode::DimensionMismatch, "need one depth map per layer");
  if (layers.empty()) fail(ErrorCode::InvalidArgument, "no layers to reconstruct");
  const int w = layers[0].image.width(), h = layers[0].image.height();
  for (std::size_t i = 0; i < layers.size(); ++i)
    if (!layers[i].image.same_size(w, h) || !depth_maps[i].depth.same_size(w, h) ||
        !depth_maps[i].valid.same_size(w, h))
      fail(ErrorCode::DimensionMismatch, "layer and depth map sizes differ");

  RGBAImage out(w, h);
  std::vector<std::pair<float, std::size_t>> stack;
  for (std::size_t p = 0; p < out.size(); ++p) {
    stack.clear();
    for (std::size_t i = 0; i < layers.size(); ++i)
      if (depth_maps[i].valid.data()[p]) stack.emplace_back(depth_maps[i].depth.data()[p], i);
    std::stable_sort(stack.begin(), stack.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    PremulAccum acc;
    for (const auto& [d, i] : stack) acc.add_on_top(layers[i].image.data()[p]);
    out.data()[p] = acc.resolve();
  }
  return out;
}

}  // namespace lcm
