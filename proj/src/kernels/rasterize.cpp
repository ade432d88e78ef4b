#include <algorithm>
#include <cmath>

#include <spdlog/spdlog.h>

#include "lcm/kernels.hpp"
#include "lcm/log.hpp"

namespace lcm::kernels {
namespace {

double edge(const Vec2& a, const Vec2& b, double px, double py) {
  return (b.x - a.x) * (py - a.y) - (b.y - a.y) * (px - a.x);
}

// Top-left ownership for a triangle with positive edge(a, b, c) in y-down
// canvas space: top edges run in +x, left edges run in -y.
bool owns(const Vec2& from, const Vec2& to) {
  const double dx = to.x - from.x;
  const double dy = to.y - from.y;
  return dy < 0.0 || (dy == 0.0 && dx > 0.0);
}

bool inside(double w, bool owned) { return w > 0.0 || (w == 0.0 && owned); }

float lerp(float a, float b, float t) { return a + t * (b - a); }

struct Texel {
  float r, g, b, a;
};

Texel texel(const TextureAtlas& atlas, int x, int y) {
  const auto& p = atlas.pixels(x, y);
  return {p.r / 255.f, p.g / 255.f, p.b / 255.f, p.a / 255.f};
}

// Bilinear sample at texel centers with clamp-to-edge; colors are blended
// premultiplied unless the four alphas agree.
Rgba sample_bilinear(const TextureAtlas& atlas, double u, double v) {
  const int w = atlas.width();
  const int h = atlas.height();
  const double fx = u * w - 0.5;
  const double fy = v * h - 0.5;
  const double flx = std::floor(fx);
  const double fly = std::floor(fy);
  const float tx = static_cast<float>(fx - flx);
  const float ty = static_cast<float>(fy - fly);
  const int x0 = std::clamp(static_cast<int>(flx), 0, w - 1);
  const int x1 = std::clamp(static_cast<int>(flx) + 1, 0, w - 1);
  const int y0 = std::clamp(static_cast<int>(fly), 0, h - 1);
  const int y1 = std::clamp(static_cast<int>(fly) + 1, 0, h - 1);
  const Texel t00 = texel(atlas, x0, y0);
  const Texel t10 = texel(atlas, x1, y0);
  const Texel t01 = texel(atlas, x0, y1);
  const Texel t11 = texel(atlas, x1, y1);

  auto bilerp = [&](float a, float b, float c, float d) { return lerp(lerp(a, b, tx), lerp(c, d, tx), ty); };

  if (t00.a == t10.a && t00.a == t01.a && t00.a == t11.a) {
    if (t00.a <= 0.f) return {};
    return {bilerp(t00.r, t10.r, t01.r, t11.r), bilerp(t00.g, t10.g, t01.g, t11.g),
            bilerp(t00.b, t10.b, t01.b, t11.b), t00.a};
  }
  const float a = bilerp(t00.a, t10.a, t01.a, t11.a);
  if (a <= 0.f) return {};
  auto channel = [&](float Texel::*c) {
    const float pm = bilerp(t00.*c * t00.a, t10.*c * t10.a, t01.*c * t01.a, t11.*c * t11.a);
    return std::min(pm / a, 1.f);
  };
  return {channel(&Texel::r), channel(&Texel::g), channel(&Texel::b), a};
}

float sample_nearest_alpha(const TextureAtlas& atlas, double u, double v) {
  const int x = std::clamp(static_cast<int>(std::floor(u * atlas.width())), 0, atlas.width() - 1);
  const int y = std::clamp(static_cast<int>(std::floor(v * atlas.height())), 0, atlas.height() - 1);
  return static_cast<float>(atlas.pixels(x, y).a) / 255.f;
}

// Pixel-center range [lo, hi] covered by the closed interval [a, b].
std::pair<int, int> center_range(double a, double b, int limit) {
  const int lo = std::max(0, static_cast<int>(std::ceil(a - 0.5)));
  const int hi = std::min(limit - 1, static_cast<int>(std::floor(b - 0.5)));
  return {lo, hi};
}

}  // namespace

MeshRaster rasterize_mesh(const CharacterModel& model, std::size_t mesh_index) {
  const ArtMesh& mesh = model.meshes[mesh_index];
  const TextureAtlas& atlas = model.atlases[mesh.texture];
  const float opacity = static_cast<float>(mesh.opacity);

  MeshRaster out;
  out.mesh_id = mesh.id;

  double minx = 1e300, miny = 1e300, maxx = -1e300, maxy = -1e300;
  for (const auto& t : mesh.triangles)
    for (auto i : t) {
      minx = std::min(minx, mesh.vertices[i].x);
      maxx = std::max(maxx, mesh.vertices[i].x);
      miny = std::min(miny, mesh.vertices[i].y);
      maxy = std::max(maxy, mesh.vertices[i].y);
    }
  if (mesh.triangles.empty()) return out;
  const auto [bx0, bx1] = center_range(minx, maxx, model.canvas_width);
  const auto [by0, by1] = center_range(miny, maxy, model.canvas_height);
  if (bx0 > bx1 || by0 > by1) return out;
  out.bbox = {bx0, by0, bx1 + 1, by1 + 1};
  const std::size_t n = static_cast<std::size_t>(out.bbox.width()) * out.bbox.height();
  out.coverage.assign(n, 0);
  out.color.assign(n, Rgba{});
  out.mask_alpha.assign(n, 0.f);

  int degenerate = 0;
  for (const auto& tri : mesh.triangles) {
    Vec2 a = mesh.vertices[tri[0]], b = mesh.vertices[tri[1]], c = mesh.vertices[tri[2]];
    Vec2 ua = mesh.uvs[tri[0]], ub = mesh.uvs[tri[1]], uc = mesh.uvs[tri[2]];
    double area = edge(a, b, c.x, c.y);
    if (area == 0.0) {
      ++degenerate;
      continue;
    }
    if (area < 0.0) {
      std::swap(b, c);
      std::swap(ub, uc);
      area = -area;
    }
    const bool own_a = owns(b, c);  // edge opposite a
    const bool own_b = owns(c, a);
    const bool own_c = owns(a, b);
    const auto [x0, x1] = center_range(std::min({a.x, b.x, c.x}), std::max({a.x, b.x, c.x}), model.canvas_width);
    const auto [y0, y1] = center_range(std::min({a.y, b.y, c.y}), std::max({a.y, b.y, c.y}), model.canvas_height);
    for (int y = y0; y <= y1; ++y) {
      const double py = y + 0.5;
      for (int x = x0; x <= x1; ++x) {
        const double px = x + 0.5;
        const double wa = edge(b, c, px, py);
        const double wb = edge(c, a, px, py);
        const double wc = edge(a, b, px, py);
        if (!inside(wa, own_a) || !inside(wb, own_b) || !inside(wc, own_c)) continue;
        const double la = wa / area, lb = wb / area, lc = wc / area;
        const double u = la * ua.x + lb * ub.x + lc * uc.x;
        const double v = la * ua.y + lb * ub.y + lc * uc.y;
        const std::size_t off = out.offset(x, y);
        Rgba color = sample_bilinear(atlas, u, v);
        color.a *= opacity;
        out.coverage[off] = 1;
        out.color[off] = color.a > 0.f ? color : Rgba{};
        out.mask_alpha[off] = sample_nearest_alpha(atlas, u, v) * opacity;
      }
    }
  }
  if (degenerate > 0)
    logger()->warn("mesh {}: {} degenerate triangle(s) skipped", mesh.id, degenerate);
  return out;
}

}  // namespace lcm::kernels
