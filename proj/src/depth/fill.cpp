// Push-pull hole filling. The sources are the known pixels bordering the
// holes (8-neighborhood), so every filled value is a convex combination of
// boundary colors.

#include <algorithm>
#include <array>

#include "lcm/depth.hpp"
#include "lcm/errors.hpp"

namespace lcm {
namespace {

struct Cell {
  std::array<double, 3> rgb{};
  double alpha = 0.0;
  double w_rgb = 0.0;  // sum of source weight * alpha
  double w = 0.0;      // sum of source weight
};

struct Level {
  int width = 0;
  int height = 0;
  std::vector<Cell> cells;
  Cell& at(int x, int y) { return cells[static_cast<std::size_t>(y) * width + x]; }
};

// Weighted mean of the children, written as v0 + sum(w (v - v0)) / sum(w) so a
// constant input averages to itself exactly.
Cell average(const std::array<const Cell*, 4>& children) {
  Cell out;
  const Cell* first_rgb = nullptr;
  const Cell* first = nullptr;
  for (const Cell* c : children) {
    if (!c) continue;
    if (c->w > 0.0 && !first) first = c;
    if (c->w_rgb > 0.0 && !first_rgb) first_rgb = c;
  }
  if (first) {
    double acc = 0.0;
    for (const Cell* c : children)
      if (c && c->w > 0.0) {
        out.w += c->w;
        acc += c->w * (c->alpha - first->alpha);
      }
    out.alpha = first->alpha + acc / out.w;
  }
  if (first_rgb) {
    std::array<double, 3> acc{};
    for (const Cell* c : children)
      if (c && c->w_rgb > 0.0) {
        out.w_rgb += c->w_rgb;
        for (int k = 0; k < 3; ++k) acc[k] += c->w_rgb * (c->rgb[k] - first_rgb->rgb[k]);
      }
    for (int k = 0; k < 3; ++k) out.rgb[k] = first_rgb->rgb[k] + acc[k] / out.w_rgb;
  }
  return out;
}

}  // namespace

RGBAImage fill_holes(const RGBAImage& layer, const Mask& hole_mask) {
  if (!hole_mask.same_size(layer)) fail(ErrorCode::DimensionMismatch, "hole mask size differs from the layer");
  const int w = layer.width(), h = layer.height();
  if (count_set(hole_mask) == 0) return layer;

  std::vector<Level> pyramid(1);
  Level& base = pyramid[0];  // only valid until the pyramid grows
  base.width = w;
  base.height = h;
  base.cells.resize(layer.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (hole_mask(x, y)) continue;
      bool border = false;
      for (int dy = -1; dy <= 1 && !border; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = x + dx, ny = y + dy;
          if (nx >= 0 && ny >= 0 && nx < w && ny < h && hole_mask(nx, ny)) {
            border = true;
            break;
          }
        }
      if (!border) continue;
      const Rgba& p = layer(x, y);
      Cell& c = base.at(x, y);
      c.rgb = {p.r, p.g, p.b};
      c.alpha = p.a;
      c.w = 1.0;
      c.w_rgb = p.a;
    }

  while (pyramid.back().width > 1 || pyramid.back().height > 1) {
    Level& fine = pyramid.back();
    Level coarse;
    coarse.width = (fine.width + 1) / 2;
    coarse.height = (fine.height + 1) / 2;
    coarse.cells.resize(static_cast<std::size_t>(coarse.width) * coarse.height);
    for (int y = 0; y < coarse.height; ++y)
      for (int x = 0; x < coarse.width; ++x) {
        std::array<const Cell*, 4> children{};
        int n = 0;
        for (int dy = 0; dy < 2; ++dy)
          for (int dx = 0; dx < 2; ++dx) {
            const int fx = 2 * x + dx, fy = 2 * y + dy;
            if (fx < fine.width && fy < fine.height) children[n] = &fine.at(fx, fy);
            ++n;
          }
        coarse.at(x, y) = average(children);
      }
    pyramid.push_back(std::move(coarse));
  }

  // Pull: cells without data inherit from their parent.
  for (std::size_t l = pyramid.size() - 1; l-- > 0;) {
    Level& fine = pyramid[l];
    Level& coarse = pyramid[l + 1];
    for (int y = 0; y < fine.height; ++y)
      for (int x = 0; x < fine.width; ++x) {
        Cell& c = fine.at(x, y);
        const Cell& parent = coarse.at(x / 2, y / 2);
        if (c.w <= 0.0) {
          c.alpha = parent.alpha;
          c.w = parent.w;
        }
        if (c.w_rgb <= 0.0) {
          c.rgb = parent.rgb;
          c.w_rgb = parent.w_rgb;
        }
      }
  }

  const Level& filled = pyramid[0];
  RGBAImage out = layer;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!hole_mask(x, y)) continue;
      const Cell& c = filled.cells[static_cast<std::size_t>(y) * w + x];
      if (c.w <= 0.0) continue;  // nothing known anywhere
      out(x, y) = {static_cast<float>(c.rgb[0]), static_cast<float>(c.rgb[1]), static_cast<float>(c.rgb[2]),
                   static_cast<float>(c.alpha)};
    }
  return out;
}

}  // namespace lcm
