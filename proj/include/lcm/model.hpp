#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lcm/image.hpp"

namespace lcm {

using ClassId = int;
inline constexpr ClassId kUnlabeled = -1;

// Ordered list of semantic classes. Class ids are indices into `classes`.
struct Taxonomy {
  std::vector<std::string> classes;
  std::vector<std::string> stratify;

  static Taxonomy default_taxonomy();

  std::size_t size() const noexcept { return classes.size(); }
  std::optional<ClassId> find(std::string_view name) const;
  ClassId require(std::string_view name) const;  // throws UnknownClass
  const std::string& name(ClassId id) const;
  bool is_stratified(ClassId id) const;
  bool valid(ClassId id) const noexcept { return id >= 0 && static_cast<std::size_t>(id) < classes.size(); }

  void validate() const;

  bool operator==(const Taxonomy&) const = default;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Vec2&) const = default;
};

using Triangle = std::array<std::uint32_t, 3>;

struct ArtMesh {
  int id = 0;
  std::string name;
  std::vector<std::string> path;  // group names, root first
  std::vector<Vec2> vertices;     // canvas pixels
  std::vector<Vec2> uvs;          // [0,1]^2, v grows downward
  std::vector<Triangle> triangles;
  int texture = 0;
  int draw_order = 0;
  double opacity = 1.0;
  ClassId label = kUnlabeled;
  std::string blend = "normal";  // only "normal" is rendered; others are kept as metadata

  bool operator==(const ArtMesh&) const = default;
};

struct TextureAtlas {
  Plane<Rgba8> pixels;

  int width() const noexcept { return pixels.width(); }
  int height() const noexcept { return pixels.height(); }

  bool operator==(const TextureAtlas&) const = default;
};

// Three-keyframe deformation: offsets at -1 and +1 per mesh id (the 0 keyframe
// is identically zero), linearly interpolated in between.
struct DeformParameter {
  std::string name;
  std::map<int, std::vector<Vec2>> minus;
  std::map<int, std::vector<Vec2>> plus;

  bool operator==(const DeformParameter&) const = default;
};

struct CharacterModel {
  int canvas_width = 0;
  int canvas_height = 0;
  std::vector<TextureAtlas> atlases;
  std::vector<ArtMesh> meshes;
  std::vector<DeformParameter> parameters;
  Taxonomy taxonomy;
  std::map<std::string, std::string> metadata;

  std::optional<std::size_t> index_of(int mesh_id) const;
  const ArtMesh& mesh(int mesh_id) const;  // throws UnknownMesh
  const DeformParameter* parameter(std::string_view name) const;

  // Mesh indices sorted by ascending draw order (back to front).
  std::vector<std::size_t> paint_order() const;

  bool operator==(const CharacterModel&) const = default;
};

struct ParseOptions {
  // Break duplicate draw orders by mesh id instead of rejecting them.
  bool retie = false;
};

// Checks every model invariant, throwing InvariantViolation on the first
// failure.
void validate_model(const CharacterModel& model);

// Reassigns draw orders so ties are broken by ascending mesh id. Relative
// order of distinct draw orders is preserved.
void retie_draw_orders(CharacterModel& model);

// model.json <-> CharacterModel. Atlases are supplied separately since the
// JSON only references them by file name.
std::string model_to_json(const CharacterModel& model);
CharacterModel model_from_json(std::string_view json, std::vector<TextureAtlas> atlases,
                               const ParseOptions& options = {});

// LCM archive: zip with model.json and atlas_<i>.png.
CharacterModel parse_model(std::span<const std::uint8_t> bytes, const ParseOptions& options = {});
std::vector<std::uint8_t> serialize_model(const CharacterModel& model);

CharacterModel load_model(const std::filesystem::path& path, const ParseOptions& options = {});
void save_model(const CharacterModel& model, const std::filesystem::path& path);

// Group tree built from hierarchy paths; node 0 is the implicit root.
struct GroupNode {
  std::string name;
  std::vector<std::string> path;
  int parent = -1;
  std::vector<int> children;
  std::vector<int> meshes;  // mesh ids directly in this group
};

std::vector<GroupNode> build_group_tree(const CharacterModel& model);

enum class Split { Train, Val, Test };

struct ManifestEntry {
  std::string path;
  std::string split;  // validated against {train, val, test}
  int pose = 0;

  bool operator==(const ManifestEntry&) const = default;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
};

struct SplitCounts {
  std::size_t train = 0;
  std::size_t val = 0;
  std::size_t test = 0;

  bool operator==(const SplitCounts&) const = default;
};

DatasetManifest parse_manifest(std::string_view jsonl);
std::string manifest_to_jsonl(const DatasetManifest& manifest);

// Counts entries per split. When `root` is given every path must exist
// beneath it.
SplitCounts validate_manifest(const DatasetManifest& manifest,
                              const std::optional<std::filesystem::path>& root = std::nullopt);

}  // namespace lcm
