#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "lcm/image.hpp"
#include "lcm/kernels.hpp"
#include "lcm/model.hpp"
#include "lcm/raster_types.hpp"

namespace lcm {

inline constexpr double kDefaultTauVis = 0.5;

// Rasterizes every mesh of a model once and answers compositing, visibility
// and topmost-mesh queries against that cache. Holds a reference to the
// model, which must outlive the scene.
class Scene {
 public:
  explicit Scene(const CharacterModel& model, Backend backend = kernels::default_backend());

  const CharacterModel& model() const noexcept { return *model_; }
  Backend backend() const noexcept { return backend_; }
  int width() const noexcept { return model_->canvas_width; }
  int height() const noexcept { return model_->canvas_height; }

  std::span<const MeshRaster> rasters() const noexcept { return rasters_; }
  const MeshRaster& raster(int mesh_id) const;

  // Mesh indices back to front.
  const std::vector<std::size_t>& paint_order() const noexcept { return order_; }
  std::vector<std::size_t> paint_order_of(const std::set<int>& mesh_ids) const;
  std::vector<std::size_t> paint_order_of_class(ClassId cls) const;

  RGBAImage composite() const;
  RGBAImage composite(const std::set<int>& visible) const;

  // One mask per mesh, indexed like model().meshes.
  std::vector<VisibilityMask> visibility(double tau = kDefaultTauVis) const;

  // Per-pixel index of the topmost positively-weighted mesh in `order`.
  Plane<std::int32_t> topmost(std::span<const std::size_t> order) const;

 private:
  const CharacterModel* model_;
  Backend backend_;
  std::vector<MeshRaster> rasters_;
  std::vector<std::size_t> order_;
};

MeshRaster rasterize_mesh(const CharacterModel& model, int mesh_id);

// Canvas-sized alpha of one raster, zero outside its footprint.
FloatPlane alpha_map(const MeshRaster& raster, int width, int height);

RGBAImage render_composite(const CharacterModel& model, const std::optional<std::set<int>>& visible = std::nullopt);

// tau must lie in (0,1). Masks are indexed like model.meshes.
std::vector<VisibilityMask> visibility_masks(const CharacterModel& model, double tau = kDefaultTauVis);

using PoseValues = std::map<std::string, double>;

// Displaces vertices by the linearly interpolated keyframe offsets of each
// named parameter, applied in the model's parameter order.
CharacterModel apply_pose(const CharacterModel& model, const PoseValues& values);

struct PosedModel {
  int pose_id = 0;  // row-major over (AngleY, AngleX) in {-1,0,1}^2; 4 is the rest pose
  double angle_x = 0.0;
  double angle_y = 0.0;
  CharacterModel model;
};

inline constexpr const char* kAngleX = "AngleX";
inline constexpr const char* kAngleY = "AngleY";

std::vector<PosedModel> generate_orientation_grid(const CharacterModel& model);

}  // namespace lcm
