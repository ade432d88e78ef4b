// Reference implementations: straightforward per-pixel loops, kept for
// testing the parallel kernels and as the baseline in bench/.

#include <algorithm>
#include <cmath>

#include "lcm/kernels.hpp"

namespace lcm::kernels {

std::vector<float> gaussian_kernel(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> w(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    w[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    sum += w[i + radius];
  }
  std::vector<float> out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) out[i] = static_cast<float>(w[i] / sum);
  return out;
}

namespace serial {

std::vector<MeshRaster> rasterize_all(const CharacterModel& model) {
  std::vector<MeshRaster> out;
  out.reserve(model.meshes.size());
  for (std::size_t i = 0; i < model.meshes.size(); ++i) out.push_back(rasterize_mesh(model, i));
  return out;
}

RGBAImage composite(int width, int height, std::span<const MeshRaster> rasters, std::span<const std::size_t> order) {
  RGBAImage out(width, height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      PremulAccum acc;
      for (auto i : order)
        if (rasters[i].covers(x, y)) acc.add_on_top(rasters[i].color[rasters[i].offset(x, y)]);
      out(x, y) = acc.resolve();
    }
  return out;
}

std::vector<VisibilityMask> visibility(int width, int height, std::span<const MeshRaster> rasters,
                                       std::span<const std::size_t> order, double tau) {
  std::vector<VisibilityMask> masks(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto& r = rasters[order[k]];
    masks[k].mesh_id = r.mesh_id;
    masks[k].width = width;
    masks[k].height = height;
    masks[k].bbox = r.bbox;
    masks[k].bits.assign(static_cast<std::size_t>(r.bbox.width()) * std::max(0, r.bbox.height()), 0);
  }
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      double transmittance = 1.0;
      for (std::size_t k = order.size(); k-- > 0;) {
        const auto& r = rasters[order[k]];
        if (!r.covers(x, y)) continue;
        const double a = r.mask_alpha[r.offset(x, y)];
        if (a * transmittance >= tau) masks[k].bits[r.offset(x, y)] = 1;
        transmittance *= 1.0 - a;
      }
    }
  return masks;
}

Plane<std::int32_t> topmost(int width, int height, std::span<const MeshRaster> rasters,
                            std::span<const std::size_t> order) {
  Plane<std::int32_t> out(width, height, -1);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (std::size_t k = order.size(); k-- > 0;) {
        const auto& r = rasters[order[k]];
        if (r.covers(x, y) && r.color[r.offset(x, y)].a > 0.f) {
          out(x, y) = static_cast<std::int32_t>(order[k]);
          break;
        }
      }
  return out;
}

std::vector<std::vector<double>> region_sums(std::span<const float> scores, int width, int /*height*/, int channels,
                                             std::span<const VisibilityMask> masks) {
  std::vector<std::vector<double>> sums(masks.size(), std::vector<double>(channels, 0.0));
  for (std::size_t m = 0; m < masks.size(); ++m) {
    const auto& mask = masks[m];
    for (int y = mask.bbox.y0; y < mask.bbox.y1; ++y)
      for (int x = mask.bbox.x0; x < mask.bbox.x1; ++x) {
        if (!mask.contains(x, y)) continue;
        const float* px = scores.data() + (static_cast<std::size_t>(y) * width + x) * channels;
        for (int c = 0; c < channels; ++c) sums[m][c] += px[c];
      }
  }
  return sums;
}

void gaussian_blur(FloatPlane& plane, double sigma) {
  const auto k = gaussian_kernel(sigma);
  const int radius = static_cast<int>(k.size() / 2);
  const int w = plane.width();
  const int h = plane.height();
  FloatPlane tmp(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = std::max(-radius, -x); i <= std::min(radius, w - 1 - x); ++i) acc += k[i + radius] * plane(x + i, y);
      tmp(x, y) = static_cast<float>(acc);
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = std::max(-radius, -y); i <= std::min(radius, h - 1 - y); ++i) acc += k[i + radius] * tmp(x, y + i);
      plane(x, y) = static_cast<float>(acc);
    }
}

}  // namespace serial
}  // namespace lcm::kernels
