#include "lcm/labeler.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include <json.hpp>

#include "lcm/errors.hpp"
#include "lcm/kernels.hpp"
#include "lcm/png_io.hpp"
#include "lcm/tensor_io.hpp"

namespace lcm {

using nlohmann::json;

namespace {

void check_masks(const CharacterModel& model, std::span<const VisibilityMask> masks) {
  if (masks.size() != model.meshes.size())
    fail(ErrorCode::DimensionMismatch, "expected one visibility mask per mesh");
  for (std::size_t i = 0; i < masks.size(); ++i) {
    if (masks[i].mesh_id != model.meshes[i].id)
      fail(ErrorCode::DimensionMismatch, "visibility masks are not in model mesh order");
    if (masks[i].width != model.canvas_width || masks[i].height != model.canvas_height)
      fail(ErrorCode::DimensionMismatch, "visibility mask size differs from the canvas");
  }
}

struct Vote {
  ClassId winner = kUnlabeled;
  double confidence = 0.0;
};

// Weighted majority with ties going to the lower class index. If every
// candidate weighs zero the vote falls back to plain counts.
Vote majority(const std::vector<std::pair<ClassId, double>>& ballots) {
  if (ballots.empty()) return {};
  std::map<ClassId, double> totals;
  double sum = 0.0;
  for (const auto& [cls, w] : ballots) {
    totals[cls] += w;
    sum += w;
  }
  if (sum <= 0.0) {
    totals.clear();
    for (const auto& [cls, w] : ballots) totals[cls] += 1.0;
    sum = static_cast<double>(ballots.size());
  }
  Vote v;
  double best = -1.0;
  for (const auto& [cls, total] : totals)  // ascending class index
    if (total > best) {
      best = total;
      v.winner = cls;
    }
  v.confidence = best / sum;
  return v;
}

bool is_prefix(const std::vector<std::string>& prefix, const std::vector<std::string>& path) {
  return prefix.size() <= path.size() && std::equal(prefix.begin(), prefix.end(), path.begin());
}

enum class CharKind { Separator, Lower, Upper, Digit, Other };

CharKind kind_of(unsigned char c) {
  if (c >= 0x80) return CharKind::Other;  // UTF-8 bytes stay inside tokens
  if (std::islower(c)) return CharKind::Lower;
  if (std::isupper(c)) return CharKind::Upper;
  if (std::isdigit(c)) return CharKind::Digit;
  return CharKind::Separator;
}

}  // namespace

std::string_view to_string(LabelSource source) {
  switch (source) {
    case LabelSource::None: return "NONE";
    case LabelSource::Vote: return "VOTE";
    case LabelSource::String: return "STRING";
    case LabelSource::Sibling: return "SIBLING";
    case LabelSource::Parent: return "PARENT";
    case LabelSource::Manual: return "MANUAL";
  }
  return "NONE";
}

LabelSource label_source_from_string(std::string_view text) {
  for (auto s : {LabelSource::None, LabelSource::Vote, LabelSource::String, LabelSource::Sibling, LabelSource::Parent,
                 LabelSource::Manual})
    if (to_string(s) == text) return s;
  fail(ErrorCode::InvalidArgument, "unknown label source '" + std::string(text) + "'");
}

void ScoreStack::validate(const Taxonomy& taxonomy) const {
  if (n_classes != static_cast<int>(taxonomy.size()))
    fail(ErrorCode::DimensionMismatch, "score stack has " + std::to_string(n_classes) + " channels, taxonomy has " +
                                           std::to_string(taxonomy.size()));
  if (scores.size() != static_cast<std::size_t>(width) * height * n_classes)
    fail(ErrorCode::DimensionMismatch, "score stack value count does not match its shape");
  for (float s : scores)
    if (!(s >= 0.f && s <= 1.f)) fail(ErrorCode::OutOfRange, "score outside [0, 1]");
}

const LabelEntry& LabelAssignment::at(int mesh_id) const {
  auto it = entries.find(mesh_id);
  if (it == entries.end()) fail(ErrorCode::UnknownMesh, "assignment has no mesh " + std::to_string(mesh_id));
  return it->second;
}

std::size_t LabelAssignment::labeled_count() const {
  return static_cast<std::size_t>(
      std::count_if(entries.begin(), entries.end(), [](const auto& kv) { return kv.second.labeled(); }));
}

LabelAssignment assignment_from_model(const CharacterModel& model) {
  LabelAssignment a;
  for (const auto& m : model.meshes)
    a.entries[m.id] = m.label == kUnlabeled ? LabelEntry{} : LabelEntry{m.label, 1.0, LabelSource::Manual};
  return a;
}

void validate_assignment(const CharacterModel& model, const LabelAssignment& assignment) {
  if (assignment.entries.size() != model.meshes.size())
    fail(ErrorCode::InvalidArgument, "assignment must cover every mesh exactly once");
  for (const auto& [id, e] : assignment.entries) {
    if (!model.index_of(id)) fail(ErrorCode::UnknownMesh, "assignment names unknown mesh " + std::to_string(id));
    if (e.label != kUnlabeled && !model.taxonomy.valid(e.label))
      fail(ErrorCode::UnknownClass, "assignment class index out of range");
  }
}

CharacterModel with_labels(const CharacterModel& model, const LabelAssignment& assignment) {
  validate_assignment(model, assignment);
  CharacterModel out = model;
  for (auto& m : out.meshes) m.label = assignment.entries.at(m.id).label;
  return out;
}

std::map<int, double> visible_weights(const CharacterModel& model, std::span<const VisibilityMask> masks) {
  check_masks(model, masks);
  std::map<int, double> w;
  for (const auto& m : masks) w[m.mesh_id] = static_cast<double>(m.count());
  return w;
}

LabelAssignment vote_seed_labels(const CharacterModel& model, const ScoreStack& stack,
                                 std::span<const VisibilityMask> masks) {
  stack.validate(model.taxonomy);
  if (stack.width != model.canvas_width || stack.height != model.canvas_height)
    fail(ErrorCode::DimensionMismatch, "score stack size differs from the canvas");
  check_masks(model, masks);

  const auto sums = kernels::region_sums(stack.scores, stack.width, stack.height, stack.n_classes, masks,
                                         kernels::default_backend());
  LabelAssignment out;
  for (std::size_t i = 0; i < masks.size(); ++i) {
    const auto count = masks[i].count();
    LabelEntry e;
    if (count > 0) {
      double best = -1.0;
      for (int c = 0; c < stack.n_classes; ++c) {
        const double mean = sums[i][c] / static_cast<double>(count);
        if (mean > best) {
          best = mean;
          e.label = c;
        }
      }
      e.confidence = best;
      e.source = LabelSource::Vote;
    }
    out.entries[masks[i].mesh_id] = e;
  }
  return out;
}

LabelMap max_pool_labels(const ScoreStack& stack, double tau_bg) {
  if (!(tau_bg >= 0.0 && tau_bg < 1.0)) fail(ErrorCode::InvalidArgument, "tau_bg must lie in [0, 1)");
  LabelMap out(stack.width, stack.height, kBackground);
  for (int y = 0; y < stack.height; ++y)
    for (int x = 0; x < stack.width; ++x) {
      int best_c = -1;
      float best = -1.f;
      for (int c = 0; c < stack.n_classes; ++c)
        if (stack.at(x, y, c) > best) {
          best = stack.at(x, y, c);
          best_c = c;
        }
      if (best_c >= 0 && best >= tau_bg) out(x, y) = static_cast<std::uint8_t>(best_c);
    }
  return out;
}

LabelMap render_label_map(const CharacterModel& model, const LabelAssignment& assignment,
                          std::span<const VisibilityMask> masks) {
  check_masks(model, masks);
  LabelMap out(model.canvas_width, model.canvas_height, kBackground);
  for (auto i : model.paint_order()) {
    const auto it = assignment.entries.find(model.meshes[i].id);
    if (it == assignment.entries.end() || !it->second.labeled()) continue;
    const auto cls = static_cast<std::uint8_t>(it->second.label);
    const auto& mask = masks[i];
    for (int y = mask.bbox.y0; y < mask.bbox.y1; ++y)
      for (int x = mask.bbox.x0; x < mask.bbox.x1; ++x)
        if (mask.contains(x, y)) out(x, y) = cls;
  }
  return out;
}

SnapResult snap_labels(const CharacterModel& model, const LabelMap& label_map, std::span<const VisibilityMask> masks,
                       const LabelAssignment* prior) {
  if (!label_map.same_size(model.canvas_width, model.canvas_height))
    fail(ErrorCode::DimensionMismatch, "label map size differs from the canvas");
  check_masks(model, masks);
  const auto n_classes = model.taxonomy.size();
  for (auto v : label_map.data())
    if (v != kBackground && v >= n_classes) fail(ErrorCode::InvalidArgument, "label map class index out of range");

  SnapResult result;
  for (std::size_t i = 0; i < masks.size(); ++i) {
    const int id = model.meshes[i].id;
    const LabelEntry* previous = nullptr;
    if (prior) {
      auto it = prior->entries.find(id);
      if (it != prior->entries.end()) previous = &it->second;
    }
    if (previous && previous->source == LabelSource::Manual) {
      result.assignment.entries[id] = *previous;
      continue;
    }
    std::vector<std::size_t> hist(n_classes, 0);
    std::size_t total = 0;
    const auto& mask = masks[i];
    for (int y = mask.bbox.y0; y < mask.bbox.y1; ++y)
      for (int x = mask.bbox.x0; x < mask.bbox.x1; ++x) {
        if (!mask.contains(x, y)) continue;
        const auto v = label_map(x, y);
        if (v == kBackground) continue;
        ++hist[v];
        ++total;
      }
    if (total == 0) {
      result.assignment.entries[id] = previous ? *previous : LabelEntry{};
      continue;
    }
    std::size_t best = 0;
    for (std::size_t c = 1; c < n_classes; ++c)
      if (hist[c] > hist[best]) best = c;
    result.assignment.entries[id] = {static_cast<ClassId>(best),
                                     static_cast<double>(hist[best]) / static_cast<double>(total), LabelSource::Vote};
  }
  result.map = render_label_map(model, result.assignment, masks);
  return result;
}

std::vector<std::string> name_tokens(std::string_view name) {
  std::vector<std::string> pieces;
  std::string current;
  CharKind prev = CharKind::Separator;
  auto flush = [&] {
    if (!current.empty()) pieces.push_back(std::move(current));
    current.clear();
  };
  for (std::size_t i = 0; i < name.size(); ++i) {
    const auto c = static_cast<unsigned char>(name[i]);
    const CharKind k = kind_of(c);
    if (k == CharKind::Separator) {
      flush();
      prev = k;
      continue;
    }
    bool boundary = false;
    if (k == CharKind::Upper && prev == CharKind::Lower) boundary = true;
    if ((k == CharKind::Digit) != (prev == CharKind::Digit) && prev != CharKind::Separator) boundary = true;
    // "HTMLParser" -> "HTML", "Parser"
    if (k == CharKind::Lower && prev == CharKind::Upper && current.size() > 1) {
      const char last = current.back();
      current.pop_back();
      flush();
      current.push_back(last);
    }
    if (boundary) flush();
    current.push_back(static_cast<char>(std::tolower(c)));
    prev = k;
  }
  flush();
  std::vector<std::string> tokens;
  std::set<std::string> seen;
  for (auto& p : pieces)
    if (p.size() >= 3 && seen.insert(p).second) tokens.push_back(std::move(p));
  return tokens;
}

LabelAssignment propagate_labels(const CharacterModel& model, const LabelAssignment& assignment,
                                 const std::map<int, double>& weights) {
  LabelAssignment out;
  for (const auto& m : model.meshes) {
    auto it = assignment.entries.find(m.id);
    out.entries[m.id] = it == assignment.entries.end() ? LabelEntry{} : it->second;
  }
  if (out.labeled_count() == 0) fail(ErrorCode::NoLabeledMesh, "propagation needs at least one labeled mesh");

  auto weight_of = [&](int id) {
    auto it = weights.find(id);
    return it == weights.end() ? 1.0 : it->second;
  };
  auto pending = [&](const ArtMesh& m) {
    const auto& e = out.entries[m.id];
    return !e.labeled() && e.source != LabelSource::Manual;
  };

  std::vector<std::vector<std::string>> tokens;
  tokens.reserve(model.meshes.size());
  for (const auto& m : model.meshes) tokens.push_back(name_tokens(m.name));

  // Each stage reads the labels as they stood when the stage began.
  auto run_stage = [&](LabelSource source, auto&& collect) {
    const LabelAssignment snapshot = out;
    std::vector<std::size_t> labeled;
    for (std::size_t i = 0; i < model.meshes.size(); ++i)
      if (snapshot.entries.at(model.meshes[i].id).labeled()) labeled.push_back(i);
    for (std::size_t u = 0; u < model.meshes.size(); ++u) {
      if (!pending(model.meshes[u])) continue;
      std::vector<std::pair<ClassId, double>> ballots;
      collect(u, labeled, snapshot, ballots);
      const auto v = majority(ballots);
      if (v.winner != kUnlabeled) out.entries[model.meshes[u].id] = {v.winner, v.confidence, source};
    }
  };

  run_stage(LabelSource::String, [&](std::size_t u, const std::vector<std::size_t>& labeled,
                                     const LabelAssignment& snap, auto& ballots) {
    std::size_t best_overlap = 0;
    std::vector<std::size_t> matches;
    for (auto l : labeled) {
      std::size_t overlap = 0;
      for (const auto& t : tokens[u])
        if (std::find(tokens[l].begin(), tokens[l].end(), t) != tokens[l].end()) ++overlap;
      if (overlap == 0 || overlap < best_overlap) continue;
      if (overlap > best_overlap) {
        best_overlap = overlap;
        matches.clear();
      }
      matches.push_back(l);
    }
    for (auto l : matches) {
      const int id = model.meshes[l].id;
      ballots.emplace_back(snap.entries.at(id).label, weight_of(id));
    }
  });

  run_stage(LabelSource::Sibling, [&](std::size_t u, const std::vector<std::size_t>& labeled,
                                      const LabelAssignment& snap, auto& ballots) {
    for (auto l : labeled)
      if (model.meshes[l].path == model.meshes[u].path) {
        const int id = model.meshes[l].id;
        ballots.emplace_back(snap.entries.at(id).label, weight_of(id));
      }
  });

  run_stage(LabelSource::Parent, [&](std::size_t u, const std::vector<std::size_t>& labeled,
                                     const LabelAssignment& snap, auto& ballots) {
    const auto& path = model.meshes[u].path;
    for (std::size_t len = path.size() + 1; len-- > 0;) {
      const std::vector<std::string> ancestor(path.begin(), path.begin() + static_cast<std::ptrdiff_t>(len));
      for (auto l : labeled)
        if (is_prefix(ancestor, model.meshes[l].path)) {
          const int id = model.meshes[l].id;
          ballots.emplace_back(snap.entries.at(id).label, weight_of(id));
        }
      if (!ballots.empty()) return;
    }
  });

  return out;
}

LabelAssignment set_manual_label(const LabelAssignment& assignment, const CharacterModel& model, int mesh_id,
                                 ClassId cls) {
  if (!model.index_of(mesh_id)) fail(ErrorCode::UnknownMesh, "no mesh with id " + std::to_string(mesh_id));
  if (cls != kUnlabeled && !model.taxonomy.valid(cls))
    fail(ErrorCode::UnknownClass, "class index " + std::to_string(cls) + " out of range");
  LabelAssignment out = assignment;
  out.entries[mesh_id] = {cls, 1.0, LabelSource::Manual};
  return out;
}

std::string assignment_to_json(const LabelAssignment& assignment, const Taxonomy& taxonomy) {
  json meshes = json::array();
  for (const auto& [id, e] : assignment.entries) {
    json j;
    j["id"] = id;
    j["class"] = e.labeled() ? json(taxonomy.name(e.label)) : json(nullptr);
    j["confidence"] = e.confidence;
    j["source"] = e.source == LabelSource::None ? json(nullptr) : json(std::string(to_string(e.source)));
    meshes.push_back(std::move(j));
  }
  return json{{"meshes", std::move(meshes)}}.dump();
}

LabelAssignment assignment_from_json(std::string_view text, const CharacterModel& model) {
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw SchemaError("", std::string("assignment is not valid JSON: ") + e.what());
  }
  if (!root.is_object() || !root.contains("meshes") || !root["meshes"].is_array())
    throw SchemaError("/meshes", "expected an array of mesh entries");
  LabelAssignment out;
  for (const auto& m : model.meshes) out.entries[m.id] = {};
  for (std::size_t i = 0; i < root["meshes"].size(); ++i) {
    const auto& j = root["meshes"][i];
    const auto p = "/meshes/" + std::to_string(i);
    if (!j.is_object() || !j.contains("id") || !j["id"].is_number_integer()) throw SchemaError(p + "/id", "expected an integer");
    const int id = j["id"].get<int>();
    if (!model.index_of(id)) fail(ErrorCode::UnknownMesh, "assignment names unknown mesh " + std::to_string(id));
    LabelEntry e;
    if (j.contains("class") && !j["class"].is_null()) {
      if (!j["class"].is_string()) throw SchemaError(p + "/class", "expected a class name");
      e.label = model.taxonomy.require(j["class"].get<std::string>());
    }
    if (j.contains("confidence") && j["confidence"].is_number()) e.confidence = j["confidence"].get<double>();
    if (j.contains("source") && j["source"].is_string()) e.source = label_source_from_string(j["source"].get<std::string>());
    out.entries[id] = e;
  }
  return out;
}

ScoreStack score_stack_from_file(std::span<const std::uint8_t> tensor_bytes, std::optional<std::string_view> sidecar,
                                 const Taxonomy& taxonomy) {
  auto t = tensor::decode(tensor_bytes, tensor::kScoreMagic);
  ScoreStack stack;
  stack.width = static_cast<int>(t.width);
  stack.height = static_cast<int>(t.height);
  stack.n_classes = static_cast<int>(t.channels);
  if (t.channels != taxonomy.size())
    fail(ErrorCode::DimensionMismatch, "score stack has " + std::to_string(t.channels) + " channels, taxonomy has " +
                                           std::to_string(taxonomy.size()));
  if (!sidecar) {
    stack.scores = std::move(t.values);
    stack.validate(taxonomy);
    return stack;
  }
  json side;
  try {
    side = json::parse(sidecar->begin(), sidecar->end());
  } catch (const json::parse_error& e) {
    throw SchemaError("", std::string("score sidecar is not valid JSON: ") + e.what());
  }
  const json& names = side.is_object() && side.contains("channels") ? side["channels"] : side;
  if (!names.is_array() || names.size() != t.channels)
    throw SchemaError("/channels", "expected one class name per channel");
  std::vector<int> target(t.channels);
  std::set<int> used;
  for (std::size_t c = 0; c < names.size(); ++c) {
    if (!names[c].is_string()) throw SchemaError("/channels/" + std::to_string(c), "expected a class name");
    target[c] = taxonomy.require(names[c].get<std::string>());
    if (!used.insert(target[c]).second) fail(ErrorCode::InvalidArgument, "class named twice in score sidecar");
  }
  stack.scores.assign(t.values.size(), 0.f);
  const std::size_t pixels = static_cast<std::size_t>(t.width) * t.height;
  for (std::size_t p = 0; p < pixels; ++p)
    for (std::size_t c = 0; c < t.channels; ++c) stack.scores[p * t.channels + target[c]] = t.values[p * t.channels + c];
  stack.validate(taxonomy);
  return stack;
}

std::vector<std::uint8_t> score_stack_to_file(const ScoreStack& stack) {
  tensor::Tensor t;
  std::copy(tensor::kScoreMagic.begin(), tensor::kScoreMagic.end(), t.magic.begin());
  t.height = static_cast<std::uint32_t>(stack.height);
  t.width = static_cast<std::uint32_t>(stack.width);
  t.channels = static_cast<std::uint32_t>(stack.n_classes);
  t.values = stack.scores;
  return tensor::encode(t);
}

std::array<std::uint8_t, 3> class_color(ClassId cls) {
  // Golden-ratio hue walk, fixed saturation and value.
  const double h = std::fmod(0.61803398875 * (cls + 1), 1.0) * 6.0;
  const double s = 0.65, v = 0.95;
  const int sector = static_cast<int>(h) % 6;
  const double f = h - std::floor(h);
  const double p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
  double r = 0, g = 0, b = 0;
  switch (sector) {
    case 0: r = v, g = t, b = p; break;
    case 1: r = q, g = v, b = p; break;
    case 2: r = p, g = v, b = t; break;
    case 3: r = p, g = q, b = v; break;
    case 4: r = t, g = p, b = v; break;
    default: r = v, g = p, b = q; break;
  }
  auto byte = [](double c) { return static_cast<std::uint8_t>(std::lround(c * 255.0)); };
  return {byte(r), byte(g), byte(b)};
}

std::vector<std::uint8_t> encode_label_map(const LabelMap& map, const Taxonomy& taxonomy) {
  std::vector<std::array<std::uint8_t, 3>> palette(256, {0, 0, 0});
  for (std::size_t c = 0; c < taxonomy.size(); ++c) palette[c] = class_color(static_cast<ClassId>(c));
  for (auto v : map.data())
    if (v != kBackground && v >= taxonomy.size()) fail(ErrorCode::InvalidArgument, "label map class index out of range");
  return png::encode_indexed(map, palette);
}

LabelMap decode_label_map(std::span<const std::uint8_t> png_bytes, const Taxonomy& taxonomy) {
  auto map = png::decode_indexed(png_bytes);
  for (auto v : map.data())
    if (v != kBackground && v >= taxonomy.size()) fail(ErrorCode::InvalidArgument, "label map class index out of range");
  return map;
}

}  // namespace lcm
