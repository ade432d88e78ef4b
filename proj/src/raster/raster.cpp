#include "lcm/raster.hpp"

#include <algorithm>

#include "lcm/errors.hpp"

namespace lcm {

Scene::Scene(const CharacterModel& model, Backend backend)
    : model_(&model), backend_(backend), rasters_(kernels::rasterize_all(model, backend)), order_(model.paint_order()) {}

const MeshRaster& Scene::raster(int mesh_id) const {
  const auto idx = model_->index_of(mesh_id);
  if (!idx) fail(ErrorCode::UnknownMesh, "no mesh with id " + std::to_string(mesh_id));
  return rasters_[*idx];
}

std::vector<std::size_t> Scene::paint_order_of(const std::set<int>& mesh_ids) const {
  std::vector<std::size_t> out;
  for (auto i : order_)
    if (mesh_ids.count(model_->meshes[i].id)) out.push_back(i);
  return out;
}

std::vector<std::size_t> Scene::paint_order_of_class(ClassId cls) const {
  std::vector<std::size_t> out;
  for (auto i : order_)
    if (model_->meshes[i].label == cls) out.push_back(i);
  return out;
}

RGBAImage Scene::composite() const { return kernels::composite(width(), height(), rasters_, order_, backend_); }

RGBAImage Scene::composite(const std::set<int>& visible) const {
  const auto order = paint_order_of(visible);
  return kernels::composite(width(), height(), rasters_, order, backend_);
}

std::vector<VisibilityMask> Scene::visibility(double tau) const {
  if (!(tau > 0.0 && tau < 1.0)) fail(ErrorCode::InvalidArgument, "tau_vis must lie in (0, 1)");
  auto in_order = kernels::visibility(width(), height(), rasters_, order_, tau, backend_);
  std::vector<VisibilityMask> out(in_order.size());
  for (std::size_t k = 0; k < order_.size(); ++k) out[order_[k]] = std::move(in_order[k]);
  return out;
}

Plane<std::int32_t> Scene::topmost(std::span<const std::size_t> order) const {
  return kernels::topmost(width(), height(), rasters_, order, backend_);
}

MeshRaster rasterize_mesh(const CharacterModel& model, int mesh_id) {
  const auto idx = model.index_of(mesh_id);
  if (!idx) fail(ErrorCode::UnknownMesh, "no mesh with id " + std::to_string(mesh_id));
  return kernels::rasterize_mesh(model, *idx);
}

FloatPlane alpha_map(const MeshRaster& raster, int width, int height) {
  FloatPlane out(width, height, 0.f);
  for (int y = raster.bbox.y0; y < raster.bbox.y1; ++y)
    for (int x = raster.bbox.x0; x < raster.bbox.x1; ++x)
      if (raster.covers(x, y)) out(x, y) = raster.color[raster.offset(x, y)].a;
  return out;
}

RGBAImage render_composite(const CharacterModel& model, const std::optional<std::set<int>>& visible) {
  Scene scene(model);
  if (!visible) return scene.composite();
  for (int id : *visible)
    if (!model.index_of(id)) fail(ErrorCode::UnknownMesh, "visible set names unknown mesh " + std::to_string(id));
  return scene.composite(*visible);
}

std::vector<VisibilityMask> visibility_masks(const CharacterModel& model, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) fail(ErrorCode::InvalidArgument, "tau_vis must lie in (0, 1)");
  return Scene(model).visibility(tau);
}

}  // namespace lcm
