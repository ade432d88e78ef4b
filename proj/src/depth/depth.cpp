#include "lcm/depth.hpp"

#include <algorithm>
#include <cmath>

#include <spdlog/spdlog.h>

#include "lcm/errors.hpp"
#include "lcm/log.hpp"
#include "lcm/raster.hpp"
#include "lcm/tensor_io.hpp"

namespace lcm {

std::map<int, double> pseudo_depth(const CharacterModel& model) {
  std::map<int, double> out;
  if (model.meshes.empty()) return out;
  std::int64_t zmin = model.meshes.front().draw_order, zmax = zmin;
  for (const auto& m : model.meshes) {
    zmin = std::min<std::int64_t>(zmin, m.draw_order);
    zmax = std::max<std::int64_t>(zmax, m.draw_order);
  }
  if (zmin == zmax) {
    if (model.meshes.size() > 1) fail(ErrorCode::InvariantViolation, "draw orders are not unique");
    logger()->warn("single-mesh model: pseudo-depth is 0");
    out[model.meshes.front().id] = 0.0;
    return out;
  }
  const double range = static_cast<double>(zmax - zmin);
  for (const auto& m : model.meshes) out[m.id] = static_cast<double>(m.draw_order - zmin) / range;
  return out;
}

PseudoDepthMap render_depth_map(const Scene& scene, std::optional<ClassId> cls) {
  const auto& model = scene.model();
  std::vector<std::size_t> order;
  if (cls) {
    if (!model.taxonomy.valid(*cls)) fail(ErrorCode::UnknownClass, "class index out of range");
    order = scene.paint_order_of_class(*cls);
  } else {
    order = scene.paint_order();
  }
  const auto depth = pseudo_depth(model);
  std::vector<float> by_index(model.meshes.size());
  for (std::size_t i = 0; i < model.meshes.size(); ++i) by_index[i] = static_cast<float>(depth.at(model.meshes[i].id));

  const auto top = scene.topmost(order);
  PseudoDepthMap out{FloatPlane(scene.width(), scene.height(), kInvalidDepth), Mask(scene.width(), scene.height(), 0)};
  for (std::size_t p = 0; p < top.size(); ++p) {
    const auto idx = top.data()[p];
    if (idx < 0) continue;
    out.depth.data()[p] = by_index[idx];
    out.valid.data()[p] = 1;
  }
  return out;
}

PseudoDepthMap render_depth_map(const CharacterModel& model, std::optional<ClassId> cls) {
  const Scene scene(model);
  return render_depth_map(scene, cls);
}

namespace {

// Pixels with positive color alpha of any mesh in `indices`.
Mask support_of(const Scene& scene, const std::vector<std::size_t>& indices) {
  Mask out(scene.width(), scene.height(), 0);
  for (auto i : indices) {
    const auto& r = scene.rasters()[i];
    for (int y = r.bbox.y0; y < r.bbox.y1; ++y)
      for (int x = r.bbox.x0; x < r.bbox.x1; ++x) {
        const auto off = r.offset(x, y);
        if (r.coverage[off] && r.color[off].a > 0.f) out(x, y) = 1;
      }
  }
  return out;
}

std::uint8_t nearest_stratum(double v, const std::vector<double>& centroids) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < centroids.size(); ++c)
    if (std::abs(v - centroids[c]) < std::abs(v - centroids[best])) best = c;
  return static_cast<std::uint8_t>(best + 1);
}

}  // namespace

Strata stratify_layer(const Scene& scene, ClassId cls, const PseudoDepthMap& depth_map, const Mask& alpha,
                      const StratifyOptions& options) {
  const auto& model = scene.model();
  if (!model.taxonomy.valid(cls)) fail(ErrorCode::UnknownClass, "class index out of range");
  const int w = scene.width(), h = scene.height();
  if (!depth_map.depth.same_size(w, h) || !depth_map.valid.same_size(w, h) || !alpha.same_size(w, h))
    fail(ErrorCode::DimensionMismatch, "depth map or alpha mask size differs from the canvas");
  if (options.k < 2) fail(ErrorCode::InvalidArgument, "stratification needs k >= 2");

  Strata s;
  s.cls = cls;
  s.assignments = Plane<std::uint8_t>(w, h, 0);
  s.hole_mask = Mask(w, h, 0);

  const auto class_order = scene.paint_order_of_class(cls);
  const auto depth = pseudo_depth(model);

  std::vector<std::size_t> pixels;
  for (std::size_t p = 0; p < alpha.size(); ++p)
    if (alpha.data()[p] && depth_map.valid.data()[p]) pixels.push_back(p);
  if (pixels.empty()) fail(ErrorCode::InvalidArgument, "class alpha mask is empty");

  std::vector<double> values;
  std::vector<std::size_t> value_mesh;
  if (options.mode == StratifyMode::Pixel) {
    for (auto p : pixels) values.push_back(depth_map.depth.data()[p]);
  } else {
    for (auto i : class_order) {
      values.push_back(depth.at(model.meshes[i].id));
      value_mesh.push_back(i);
    }
  }

  KMeansResult km;
  try {
    km = kmeans_1d(values, options.k, options.seed);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateInput) throw;
    s.split = false;
    s.centroids = {values.front()};
    for (auto p : pixels) s.assignments.data()[p] = kStratumBack;
    for (auto i : class_order) s.mesh_strata[model.meshes[i].id] = kStratumBack;
    return s;
  }
  s.split = true;
  s.centroids = km.centroids;

  if (options.mode == StratifyMode::Pixel) {
    for (std::size_t j = 0; j < pixels.size(); ++j) s.assignments.data()[pixels[j]] = km.assignments[j] + 1;
    for (auto i : class_order) s.mesh_strata[model.meshes[i].id] = nearest_stratum(depth.at(model.meshes[i].id), s.centroids);
  } else {
    for (std::size_t j = 0; j < value_mesh.size(); ++j)
      s.mesh_strata[model.meshes[value_mesh[j]].id] = km.assignments[j] + 1;
    const auto top = scene.topmost(class_order);
    for (auto p : pixels) {
      const auto idx = top.data()[p];
      s.assignments.data()[p] =
          idx >= 0 ? static_cast<std::uint8_t>(s.mesh_strata.at(model.meshes[idx].id))
                   : nearest_stratum(depth_map.depth.data()[p], s.centroids);
    }
  }

  // Content of a stratum that some nearer stratum draws over.
  const int k = s.k();
  std::vector<Mask> supports;
  for (int st = 1; st <= k; ++st) {
    std::vector<std::size_t> members;
    for (auto i : class_order)
      if (s.mesh_strata.at(model.meshes[i].id) == st) members.push_back(i);
    supports.push_back(support_of(scene, members));
  }
  Mask nearer(w, h, 0);
  for (int st = k - 1; st >= 1; --st) {
    for (std::size_t p = 0; p < nearer.size(); ++p) nearer.data()[p] |= supports[st].data()[p];
    for (std::size_t p = 0; p < nearer.size(); ++p)
      if (supports[st - 1].data()[p] && nearer.data()[p]) s.hole_mask.data()[p] = 1;
  }
  return s;
}

Plane<std::uint16_t> quantize_depth(const PseudoDepthMap& map) {
  Plane<std::uint16_t> out(map.depth.width(), map.depth.height(), 0);
  for (std::size_t p = 0; p < out.size(); ++p) {
    if (!map.valid.data()[p]) continue;
    const double d = std::clamp(static_cast<double>(map.depth.data()[p]), 0.0, 1.0);
    out.data()[p] = static_cast<std::uint16_t>(std::floor(d * 65535.0 + 0.5));
  }
  return out;
}

std::vector<std::uint8_t> depth_to_tensor(const PseudoDepthMap& map) {
  tensor::Tensor t;
  std::copy(tensor::kDepthMagic.begin(), tensor::kDepthMagic.end(), t.magic.begin());
  t.height = static_cast<std::uint32_t>(map.depth.height());
  t.width = static_cast<std::uint32_t>(map.depth.width());
  t.channels = 1;
  t.values.resize(map.depth.size());
  for (std::size_t p = 0; p < t.values.size(); ++p)
    t.values[p] = map.valid.data()[p] ? map.depth.data()[p] : kInvalidDepth;
  return tensor::encode(t);
}

PseudoDepthMap depth_from_tensor(std::span<const std::uint8_t> bytes) {
  auto t = tensor::decode(bytes, tensor::kDepthMagic);
  if (t.channels != 1) fail(ErrorCode::MalformedArchive, "depth tensor must have one channel");
  const int w = static_cast<int>(t.width), h = static_cast<int>(t.height);
  PseudoDepthMap out{FloatPlane(w, h, kInvalidDepth), Mask(w, h, 0)};
  for (std::size_t p = 0; p < t.values.size(); ++p) {
    const float v = t.values[p];
    if (v >= 0.f && v <= 1.f) {
      out.depth.data()[p] = v;
      out.valid.data()[p] = 1;
    } else if (v != kInvalidDepth) {
      fail(ErrorCode::OutOfRange, "depth value outside [0, 1]");
    }
  }
  return out;
}

}  // namespace lcm
