#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "lcm/depth.hpp"
#include "lcm/image.hpp"
#include "lcm/labeler.hpp"
#include "lcm/model.hpp"

namespace lcm::fx {

using Rng = std::mt19937_64;

// Uniform-color atlas; every bilinear or nearest sample returns exactly `c`.
TextureAtlas solid_atlas(Rgba8 c, int size = 4);

// Axis-aligned quad from two triangles with uvs spanning the atlas.
ArtMesh quad_mesh(int id, double x0, double y0, double x1, double y1, int texture, int draw_order,
                  std::string name = {}, std::vector<std::string> path = {});

// A model with one solid atlas per mesh, appended in call order.
struct ModelBuilder {
  CharacterModel model;

  explicit ModelBuilder(int width, int height);
  ModelBuilder& quad(int id, double x0, double y0, double x1, double y1, int draw_order, Rgba8 color,
                     ClassId label = kUnlabeled, std::string name = {}, std::vector<std::string> path = {});
  ModelBuilder& triangle(int id, Vec2 a, Vec2 b, Vec2 c, int draw_order, Rgba8 color, ClassId label = kUnlabeled);
  CharacterModel build() const;
};

struct RandomModelOptions {
  int width = 64;
  int height = 64;
  int min_meshes = 1;
  int max_meshes = 10;
  bool binary_alpha = true;  // alpha 255 and opacity 1
  bool labeled = false;      // every mesh labeled
  int classes_used = 19;     // labels drawn from the first N classes
};

CharacterModel random_model(Rng& rng, const RandomModelOptions& options = {});

// z = {3, 7, 11}: a back hair sheet, a face, and a front fringe overlapping
// both; labels Hair, Face, Hair.
CharacterModel tri3_model();

// Pose parameters AngleX/AngleY moving every vertex of every mesh.
void add_angle_parameters(CharacterModel& model, Rng& rng);

// ---- independent oracles --------------------------------------------------

// Pixel-center point-in-triangle with the top-left fill convention,
// evaluated independently of the library rasterizer.
bool triangle_covers(Vec2 a, Vec2 b, Vec2 c, int x, int y);
bool mesh_covers(const ArtMesh& mesh, int x, int y);

// Straight color of a solid-atlas mesh with opacity folded in.
Rgba solid_color(const CharacterModel& model, const ArtMesh& mesh);
float solid_mask_alpha(const CharacterModel& model, const ArtMesh& mesh);

// Painter's algorithm with straight-alpha "over" in double precision.
RGBAImage painter_oracle(const CharacterModel& model, const std::set<int>* only = nullptr);

// Per-pixel transmittance visibility; masks indexed like model.meshes.
std::vector<Mask> visibility_oracle(const CharacterModel& model, double tau);

// Topmost covering mesh index per pixel (mesh color alpha > 0), -1 if none.
Plane<int> topmost_oracle(const CharacterModel& model, const std::set<int>* only = nullptr);

// Per-mesh mean score per class over its visible pixels, accumulated in
// row-major pixel order; argmax with ties to the lower class.
LabelAssignment vote_oracle(const CharacterModel& model, const ScoreStack& stack, const std::vector<Mask>& masks);

// Random stack with values drawn from {0, 1/8, ..., 1} so class means tie
// often.
ScoreStack coarse_score_stack(Rng& rng, int width, int height, int classes);

// A labeled hierarchy exercising each propagation stage, with the expected
// result worked out by hand from how the scenario is built.
struct PropagationScenario {
  CharacterModel model;
  LabelAssignment input;
  std::map<int, double> weights;
  LabelAssignment expected;
};

PropagationScenario propagation_scenario(int index);

}  // namespace lcm::fx
