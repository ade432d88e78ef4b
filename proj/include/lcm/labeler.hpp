#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lcm/image.hpp"
#include "lcm/model.hpp"
#include "lcm/raster_types.hpp"

namespace lcm {

inline constexpr std::uint8_t kBackground = 255;
inline constexpr double kDefaultTauBg = 0.05;

// H x W x N class activations in [0,1], channel index fastest.
struct ScoreStack {
  int width = 0;
  int height = 0;
  int n_classes = 0;
  std::vector<float> scores;

  float at(int x, int y, int c) const noexcept {
    return scores[(static_cast<std::size_t>(y) * width + x) * n_classes + c];
  }
  float& at(int x, int y, int c) noexcept {
    return scores[(static_cast<std::size_t>(y) * width + x) * n_classes + c];
  }

  void validate(const Taxonomy& taxonomy) const;
};

// Class index per pixel, kBackground where unlabeled.
using LabelMap = Plane<std::uint8_t>;

enum class LabelSource { None, Vote, String, Sibling, Parent, Manual };

std::string_view to_string(LabelSource source);
LabelSource label_source_from_string(std::string_view text);

struct LabelEntry {
  ClassId label = kUnlabeled;
  double confidence = 0.0;
  LabelSource source = LabelSource::None;

  bool labeled() const noexcept { return label != kUnlabeled; }
  bool operator==(const LabelEntry&) const = default;
};

struct LabelAssignment {
  std::map<int, LabelEntry> entries;  // keyed by mesh id

  const LabelEntry& at(int mesh_id) const;
  std::size_t labeled_count() const;

  bool operator==(const LabelAssignment&) const = default;
};

// Labels stored in the model become MANUAL entries with confidence 1.
LabelAssignment assignment_from_model(const CharacterModel& model);
CharacterModel with_labels(const CharacterModel& model, const LabelAssignment& assignment);
void validate_assignment(const CharacterModel& model, const LabelAssignment& assignment);

// Visible-pixel count per mesh id.
std::map<int, double> visible_weights(const CharacterModel& model, std::span<const VisibilityMask> masks);

LabelAssignment vote_seed_labels(const CharacterModel& model, const ScoreStack& stack,
                                 std::span<const VisibilityMask> masks);

LabelMap max_pool_labels(const ScoreStack& stack, double tau_bg = kDefaultTauBg);

struct SnapResult {
  LabelMap map;
  LabelAssignment assignment;
};

// Majority class per visible fragment. Fragments whose visible region is all
// background keep their `prior` label (or stay unlabeled); MANUAL entries in
// `prior` are never changed.
SnapResult snap_labels(const CharacterModel& model, const LabelMap& label_map, std::span<const VisibilityMask> masks,
                       const LabelAssignment* prior = nullptr);

// STRING, SIBLING, then PARENT voting for unlabeled meshes. Missing weights
// count as 1.
LabelAssignment propagate_labels(const CharacterModel& model, const LabelAssignment& assignment,
                                 const std::map<int, double>& weights = {});

LabelAssignment set_manual_label(const LabelAssignment& assignment, const CharacterModel& model, int mesh_id,
                                 ClassId cls);

// Class of the topmost labeled mesh whose mask contains the pixel.
LabelMap render_label_map(const CharacterModel& model, const LabelAssignment& assignment,
                          std::span<const VisibilityMask> masks);

// Lower-cased name tokens of length >= 3, split at non-alphanumerics and at
// lower->upper and letter<->digit transitions.
std::vector<std::string> name_tokens(std::string_view name);

std::string assignment_to_json(const LabelAssignment& assignment, const Taxonomy& taxonomy);
LabelAssignment assignment_from_json(std::string_view json, const CharacterModel& model);

// Score stack file plus optional sidecar naming each channel; channels are
// reordered into taxonomy order.
ScoreStack score_stack_from_file(std::span<const std::uint8_t> tensor_bytes, std::optional<std::string_view> sidecar,
                                 const Taxonomy& taxonomy);
std::vector<std::uint8_t> score_stack_to_file(const ScoreStack& stack);

std::array<std::uint8_t, 3> class_color(ClassId cls);
std::vector<std::uint8_t> encode_label_map(const LabelMap& map, const Taxonomy& taxonomy);
LabelMap decode_label_map(std::span<const std::uint8_t> png_bytes, const Taxonomy& taxonomy);

}  // namespace lcm
