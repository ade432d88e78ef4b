#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include "lcm/labeler.hpp"
#include "lcm/pipeline.hpp"
#include "lcm/raster.hpp"

namespace lcm {

// Editable label state for one model. The model itself is never modified;
// every mutation replaces the assignment, bumps the revision and pushes the
// previous assignment on the undo stack. Mutations accept an expected
// revision and throw Conflict when it is stale.
class Session {
 public:
  explicit Session(CharacterModel model, PipelineOptions options = {}, std::string id = "default");

  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  const std::string& id() const noexcept { return id_; }
  const CharacterModel& model() const noexcept { return model_; }
  const Scene& scene() const noexcept { return scene_; }
  const std::vector<VisibilityMask>& masks() const noexcept { return masks_; }
  const PipelineOptions& options() const noexcept { return options_; }

  LabelAssignment assignment() const;
  std::uint64_t revision() const;
  bool dirty() const;
  std::size_t undo_depth() const;
  void mark_saved();

  std::uint64_t set_label(int mesh_id, ClassId cls, std::optional<std::uint64_t> expected = std::nullopt);
  std::uint64_t propagate(std::optional<std::uint64_t> expected = std::nullopt);
  std::uint64_t snap(const LabelMap& map, std::optional<std::uint64_t> expected = std::nullopt);
  std::uint64_t undo(std::optional<std::uint64_t> expected = std::nullopt);

  // Composite of the visible meshes as PNG; cached per visible set.
  std::vector<std::uint8_t> render_png(const std::set<int>& visible) const;
  // Mesh ids currently labeled `cls`.
  std::set<int> meshes_of_class(ClassId cls) const;
  RGBAImage class_preview(ClassId cls) const;
  std::vector<std::uint8_t> export_psd() const;

 private:
  std::uint64_t commit(LabelAssignment next, std::optional<std::uint64_t> expected);

  std::string id_;
  CharacterModel model_;
  PipelineOptions options_;
  Scene scene_;
  std::vector<VisibilityMask> masks_;

  mutable std::shared_mutex mutex_;
  LabelAssignment assignment_;
  std::vector<LabelAssignment> undo_;
  std::uint64_t revision_ = 0;
  std::uint64_t saved_revision_ = 0;

  mutable std::mutex cache_mutex_;
  mutable std::map<std::set<int>, std::vector<std::uint8_t>> render_cache_;
};

}  // namespace lcm
