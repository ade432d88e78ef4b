// OpenMP kernels. Per-pixel arithmetic runs in the same order as the serial
// reference, so results are bit-identical; only the loop structure differs
// (row partitioning and per-row active lists of meshes).

#include <algorithm>

#include <omp.h>

#include "lcm/kernels.hpp"

namespace lcm::kernels {
namespace {

// Positions k in `order` whose raster bbox intersects row y, ascending.
void active_on_row(std::span<const MeshRaster> rasters, std::span<const std::size_t> order, int y,
                   std::vector<std::size_t>& out) {
  out.clear();
  for (std::size_t k = 0; k < order.size(); ++k) {
    const Rect& b = rasters[order[k]].bbox;
    if (y >= b.y0 && y < b.y1 && !b.empty()) out.push_back(k);
  }
}

}  // namespace

namespace omp {

std::vector<MeshRaster> rasterize_all(const CharacterModel& model) {
  std::vector<MeshRaster> out(model.meshes.size());
  const auto n = static_cast<std::int64_t>(model.meshes.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t i = 0; i < n; ++i) out[i] = rasterize_mesh(model, static_cast<std::size_t>(i));
  return out;
}

RGBAImage composite(int width, int height, std::span<const MeshRaster> rasters, std::span<const std::size_t> order) {
  RGBAImage out(width, height);
#pragma omp parallel
  {
    std::vector<std::size_t> active;
#pragma omp for schedule(static)
    for (int y = 0; y < height; ++y) {
      active_on_row(rasters, order, y, active);
      auto row = out.row(y);
      for (int x = 0; x < width; ++x) {
        PremulAccum acc;
        for (auto k : active) {
          const auto& r = rasters[order[k]];
          if (x < r.bbox.x0 || x >= r.bbox.x1) continue;
          const auto off = r.offset(x, y);
          if (r.coverage[off]) acc.add_on_top(r.color[off]);
        }
        row[x] = acc.resolve();
      }
    }
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
#pragma omp parallel
  {
    std::vector<std::size_t> active;
#pragma omp for schedule(static)
    for (int y = 0; y < height; ++y) {
      active_on_row(rasters, order, y, active);
      if (active.empty()) continue;
      for (int x = 0; x < width; ++x) {
        double transmittance = 1.0;
        for (std::size_t j = active.size(); j-- > 0;) {
          const std::size_t k = active[j];
          const auto& r = rasters[order[k]];
          if (x < r.bbox.x0 || x >= r.bbox.x1) continue;
          const auto off = r.offset(x, y);
          if (!r.coverage[off]) continue;
          const double a = r.mask_alpha[off];
          if (a * transmittance >= tau) masks[k].bits[off] = 1;
          transmittance *= 1.0 - a;
        }
      }
    }
  }
  return masks;
}

Plane<std::int32_t> topmost(int width, int height, std::span<const MeshRaster> rasters,
                            std::span<const std::size_t> order) {
  Plane<std::int32_t> out(width, height, -1);
#pragma omp parallel
  {
    std::vector<std::size_t> active;
#pragma omp for schedule(static)
    for (int y = 0; y < height; ++y) {
      active_on_row(rasters, order, y, active);
      for (int x = 0; x < width; ++x)
        for (std::size_t j = active.size(); j-- > 0;) {
          const auto& r = rasters[order[active[j]]];
          if (x < r.bbox.x0 || x >= r.bbox.x1) continue;
          const auto off = r.offset(x, y);
          if (r.coverage[off] && r.color[off].a > 0.f) {
            out(x, y) = static_cast<std::int32_t>(order[active[j]]);
            break;
          }
        }
    }
  }
  return out;
}

std::vector<std::vector<double>> region_sums(std::span<const float> scores, int width, int /*height*/, int channels,
                                             std::span<const VisibilityMask> masks) {
  std::vector<std::vector<double>> sums(masks.size(), std::vector<double>(channels, 0.0));
  const auto n = static_cast<std::int64_t>(masks.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t m = 0; m < n; ++m) {
    const auto& mask = masks[m];
    auto& acc = sums[m];
    const int bw = mask.bbox.width();
    for (int y = mask.bbox.y0; y < mask.bbox.y1; ++y) {
      const std::uint8_t* bits = mask.bits.data() + static_cast<std::size_t>(y - mask.bbox.y0) * bw;
      for (int x = mask.bbox.x0; x < mask.bbox.x1; ++x) {
        if (!bits[x - mask.bbox.x0]) continue;
        const float* px = scores.data() + (static_cast<std::size_t>(y) * width + x) * channels;
        for (int c = 0; c < channels; ++c) acc[c] += px[c];
      }
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
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    const auto src = plane.row(y);
    auto dst = tmp.row(y);
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = std::max(-radius, -x); i <= std::min(radius, w - 1 - x); ++i) acc += k[i + radius] * src[x + i];
      dst[x] = static_cast<float>(acc);
    }
  }
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    auto dst = plane.row(y);
    const int lo = std::max(-radius, -y);
    const int hi = std::min(radius, h - 1 - y);
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = lo; i <= hi; ++i) acc += k[i + radius] * tmp(x, y + i);
      dst[x] = static_cast<float>(acc);
    }
  }
}

}  // namespace omp

Backend default_backend() noexcept { return Backend::OpenMP; }

std::vector<MeshRaster> rasterize_all(const CharacterModel& model, Backend backend) {
  return backend == Backend::Serial ? serial::rasterize_all(model) : omp::rasterize_all(model);
}

RGBAImage composite(int width, int height, std::span<const MeshRaster> rasters, std::span<const std::size_t> order,
                    Backend backend) {
  return backend == Backend::Serial ? serial::composite(width, height, rasters, order)
                                    : omp::composite(width, height, rasters, order);
}

std::vector<VisibilityMask> visibility(int width, int height, std::span<const MeshRaster> rasters,
                                       std::span<const std::size_t> order, double tau, Backend backend) {
  return backend == Backend::Serial ? serial::visibility(width, height, rasters, order, tau)
                                    : omp::visibility(width, height, rasters, order, tau);
}

Plane<std::int32_t> topmost(int width, int height, std::span<const MeshRaster> rasters,
                            std::span<const std::size_t> order, Backend backend) {
  return backend == Backend::Serial ? serial::topmost(width, height, rasters, order)
                                    : omp::topmost(width, height, rasters, order);
}

std::vector<std::vector<double>> region_sums(std::span<const float> scores, int width, int height, int channels,
                                             std::span<const VisibilityMask> masks, Backend backend) {
  return backend == Backend::Serial ? serial::region_sums(scores, width, height, channels, masks)
                                    : omp::region_sums(scores, width, height, channels, masks);
}

void gaussian_blur(FloatPlane& plane, double sigma, Backend backend) {
  if (backend == Backend::Serial)
    serial::gaussian_blur(plane, sigma);
  else
    omp::gaussian_blur(plane, sigma);
}

}  // namespace lcm::kernels
