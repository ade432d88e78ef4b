#include <cmath>

#include "lcm/errors.hpp"
#include "lcm/raster.hpp"

namespace lcm {

CharacterModel apply_pose(const CharacterModel& model, const PoseValues& values) {
  for (const auto& [name, value] : values) {
    if (!model.parameter(name)) fail(ErrorCode::UnknownParameter, "unknown parameter '" + name + "'");
    if (!(value >= -1.0 && value <= 1.0))
      fail(ErrorCode::OutOfRange, "parameter '" + name + "' value " + std::to_string(value) + " outside [-1, 1]");
  }

  CharacterModel posed = model;
  for (const auto& param : model.parameters) {
    auto it = values.find(param.name);
    if (it == values.end() || it->second == 0.0) continue;
    const double v = it->second;
    const auto& side = v < 0.0 ? param.minus : param.plus;
    const double weight = std::abs(v);
    for (const auto& [mesh_id, offsets] : side) {
      auto& mesh = posed.meshes[*posed.index_of(mesh_id)];
      for (std::size_t i = 0; i < offsets.size(); ++i) {
        mesh.vertices[i].x += weight * offsets[i].x;
        mesh.vertices[i].y += weight * offsets[i].y;
      }
    }
  }
  return posed;
}

std::vector<PosedModel> generate_orientation_grid(const CharacterModel& model) {
  for (const char* name : {kAngleX, kAngleY})
    if (!model.parameter(name)) fail(ErrorCode::MissingParameter, std::string("model has no ") + name + " parameter");

  std::vector<PosedModel> grid;
  grid.reserve(9);
  int pose_id = 0;
  for (int ay = -1; ay <= 1; ++ay)
    for (int ax = -1; ax <= 1; ++ax) {
      PosedModel p;
      p.pose_id = pose_id++;
      p.angle_x = ax;
      p.angle_y = ay;
      p.model = apply_pose(model, {{kAngleX, static_cast<double>(ax)}, {kAngleY, static_cast<double>(ay)}});
      grid.push_back(std::move(p));
    }
  return grid;
}

}  // namespace lcm
