#include "lcm/session.hpp"

#include <mutex>

#include "lcm/errors.hpp"
#include "lcm/kernels.hpp"
#include "lcm/png_io.hpp"

namespace lcm {

Session::Session(CharacterModel model, PipelineOptions options, std::string id)
    : id_(std::move(id)),
      model_(std::move(model)),
      options_(options),
      scene_(model_),
      masks_(scene_.visibility(options_.tau_vis)),
      assignment_(assignment_from_model(model_)) {}

LabelAssignment Session::assignment() const {
  std::shared_lock lock(mutex_);
  return assignment_;
}

std::uint64_t Session::revision() const {
  std::shared_lock lock(mutex_);
  return revision_;
}

bool Session::dirty() const {
  std::shared_lock lock(mutex_);
  return revision_ != saved_revision_;
}

std::size_t Session::undo_depth() const {
  std::shared_lock lock(mutex_);
  return undo_.size();
}

void Session::mark_saved() {
  std::unique_lock lock(mutex_);
  saved_revision_ = revision_;
}

std::uint64_t Session::commit(LabelAssignment next, std::optional<std::uint64_t> expected) {
  // caller holds the unique lock
  if (expected && *expected != revision_)
    fail(ErrorCode::Conflict, "revision " + std::to_string(*expected) + " is stale (current " +
                                  std::to_string(revision_) + ")");
  undo_.push_back(std::move(assignment_));
  assignment_ = std::move(next);
  return ++revision_;
}

std::uint64_t Session::set_label(int mesh_id, ClassId cls, std::optional<std::uint64_t> expected) {
  std::unique_lock lock(mutex_);
  auto next = set_manual_label(assignment_, model_, mesh_id, cls);
  return commit(std::move(next), expected);
}

std::uint64_t Session::propagate(std::optional<std::uint64_t> expected) {
  std::unique_lock lock(mutex_);
  auto next = propagate_labels(model_, assignment_, visible_weights(model_, masks_));
  return commit(std::move(next), expected);
}

std::uint64_t Session::snap(const LabelMap& map, std::optional<std::uint64_t> expected) {
  std::unique_lock lock(mutex_);
  auto next = snap_labels(model_, map, masks_, &assignment_).assignment;
  return commit(std::move(next), expected);
}

std::uint64_t Session::undo(std::optional<std::uint64_t> expected) {
  std::unique_lock lock(mutex_);
  if (expected && *expected != revision_)
    fail(ErrorCode::Conflict, "revision " + std::to_string(*expected) + " is stale");
  if (undo_.empty()) fail(ErrorCode::Conflict, "nothing to undo");
  assignment_ = std::move(undo_.back());
  undo_.pop_back();
  return ++revision_;
}

std::vector<std::uint8_t> Session::render_png(const std::set<int>& visible) const {
  for (int id : visible)
    if (!model_.index_of(id)) fail(ErrorCode::UnknownMesh, "no mesh with id " + std::to_string(id));
  {
    std::lock_guard lock(cache_mutex_);
    auto it = render_cache_.find(visible);
    if (it != render_cache_.end()) return it->second;
  }
  auto png_bytes = png::encode_rgba8(png::quantize(scene_.composite(visible)));
  std::lock_guard lock(cache_mutex_);
  return render_cache_.emplace(visible, std::move(png_bytes)).first->second;
}

std::set<int> Session::meshes_of_class(ClassId cls) const {
  std::shared_lock lock(mutex_);
  std::set<int> out;
  for (const auto& [id, e] : assignment_.entries)
    if (e.label == cls) out.insert(id);
  return out;
}

RGBAImage Session::class_preview(ClassId cls) const {
  if (!model_.taxonomy.valid(cls)) fail(ErrorCode::UnknownClass, "class index out of range");
  return scene_.composite(meshes_of_class(cls));
}

std::vector<std::uint8_t> Session::export_psd() const {
  const CharacterModel labeled = with_labels(model_, assignment());
  const Scene scene(labeled, scene_.backend());
  const auto set = compute_layers(scene, options_);
  auto stack = psd_stack(scene, set);
  if (stack.empty()) fail(ErrorCode::InvalidArgument, "no layers to export");
  sort_psd_layers(stack);
  return encode_psd(stack, labeled.canvas_width, labeled.canvas_height);
}

}  // namespace lcm
