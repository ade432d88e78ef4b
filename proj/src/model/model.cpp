#include "lcm/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <json.hpp>

#include "lcm/archive.hpp"
#include "lcm/errors.hpp"
#include "lcm/log.hpp"
#include "lcm/png_io.hpp"

#include <spdlog/spdlog.h>

namespace lcm {

using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

std::string atlas_file_name(std::size_t i) { return "atlas_" + std::to_string(i) + ".png"; }

[[noreturn]] void invariant(const std::string& message) { fail(ErrorCode::InvariantViolation, message); }

// ---- schema helpers -------------------------------------------------------

const json& field(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) throw SchemaError(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(path + "/" + key, "missing required field");
  return *it;
}

const json* optional_field(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() || it->is_null() ? nullptr : &*it;
}

long long as_int(const json& v, const std::string& path) {
  if (v.is_number_integer()) return v.get<long long>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::floor(d) == d && std::abs(d) < 9e15) return static_cast<long long>(d);
  }
  throw SchemaError(path, "expected an integer");
}

double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) throw SchemaError(path, "expected a number");
  return v.get<double>();
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw SchemaError(path, "expected a string");
  return v.get<std::string>();
}

const json& as_array(const json& v, const std::string& path) {
  if (!v.is_array()) throw SchemaError(path, "expected an array");
  return v;
}

std::vector<Vec2> as_points(const json& v, const std::string& path) {
  std::vector<Vec2> out;
  const auto& arr = as_array(v, path);
  out.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto p = path + "/" + std::to_string(i);
    const auto& pt = as_array(arr[i], p);
    if (pt.size() != 2) throw SchemaError(p, "expected a pair [x, y]");
    out.push_back({as_number(pt[0], p + "/0"), as_number(pt[1], p + "/1")});
  }
  return out;
}

json points_json(const std::vector<Vec2>& pts) {
  json arr = json::array();
  for (const auto& p : pts) arr.push_back(json::array({p.x, p.y}));
  return arr;
}

std::vector<std::string> as_string_list(const json& v, const std::string& path) {
  std::vector<std::string> out;
  const auto& arr = as_array(v, path);
  for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(as_string(arr[i], path + "/" + std::to_string(i)));
  return out;
}

}  // namespace

// ---- taxonomy -------------------------------------------------------------

Taxonomy Taxonomy::default_taxonomy() {
  return {{"Hair", "Face", "Eyes", "Eyebrows", "Mouth", "Ears", "Neck", "Torso", "Arms", "Hands", "Legs", "Feet",
           "Topwear", "Bottomwear", "Handwear", "Footwear", "Headwear", "Accessories", "Other"},
          {"Hair", "Handwear", "Topwear", "Bottomwear"}};
}

std::optional<ClassId> Taxonomy::find(std::string_view name) const {
  for (std::size_t i = 0; i < classes.size(); ++i)
    if (classes[i] == name) return static_cast<ClassId>(i);
  return std::nullopt;
}

ClassId Taxonomy::require(std::string_view name) const {
  if (auto id = find(name)) return *id;
  fail(ErrorCode::UnknownClass, "unknown class '" + std::string(name) + "'");
}

const std::string& Taxonomy::name(ClassId id) const {
  if (!valid(id)) fail(ErrorCode::UnknownClass, "class index " + std::to_string(id) + " out of range");
  return classes[static_cast<std::size_t>(id)];
}

bool Taxonomy::is_stratified(ClassId id) const {
  if (!valid(id)) return false;
  return std::find(stratify.begin(), stratify.end(), classes[id]) != stratify.end();
}

void Taxonomy::validate() const {
  if (classes.empty()) invariant("taxonomy is empty");
  if (classes.size() > 255) invariant("taxonomy has more than 255 classes");
  std::set<std::string> seen;
  for (const auto& c : classes) {
    if (c.empty()) invariant("taxonomy contains an empty class name");
    if (!seen.insert(c).second) invariant("duplicate class name '" + c + "'");
  }
  for (const auto& s : stratify)
    if (!seen.count(s)) invariant("stratify class '" + s + "' is not in the taxonomy");
}

// ---- model ----------------------------------------------------------------

std::optional<std::size_t> CharacterModel::index_of(int mesh_id) const {
  for (std::size_t i = 0; i < meshes.size(); ++i)
    if (meshes[i].id == mesh_id) return i;
  return std::nullopt;
}

const ArtMesh& CharacterModel::mesh(int mesh_id) const {
  if (auto i = index_of(mesh_id)) return meshes[*i];
  fail(ErrorCode::UnknownMesh, "no mesh with id " + std::to_string(mesh_id));
}

const DeformParameter* CharacterModel::parameter(std::string_view name) const {
  for (const auto& p : parameters)
    if (p.name == name) return &p;
  return nullptr;
}

std::vector<std::size_t> CharacterModel::paint_order() const {
  std::vector<std::size_t> order(meshes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (meshes[a].draw_order != meshes[b].draw_order) return meshes[a].draw_order < meshes[b].draw_order;
    return meshes[a].id < meshes[b].id;
  });
  return order;
}

void validate_model(const CharacterModel& model) {
  if (model.canvas_width < 1 || model.canvas_height < 1) invariant("canvas dimensions must be >= 1");
  if (model.meshes.empty()) invariant("model has no meshes");
  model.taxonomy.validate();
  for (std::size_t i = 0; i < model.atlases.size(); ++i)
    if (model.atlases[i].width() < 1 || model.atlases[i].height() < 1)
      invariant("atlas " + std::to_string(i) + " is empty");

  std::set<int> ids;
  std::set<int> orders;
  for (const auto& m : model.meshes) {
    const std::string where = "mesh " + std::to_string(m.id);
    if (!ids.insert(m.id).second) invariant("duplicate mesh id " + std::to_string(m.id));
    if (!orders.insert(m.draw_order).second)
      invariant(where + ": draw order " + std::to_string(m.draw_order) + " is shared with another mesh");
    if (m.uvs.size() != m.vertices.size()) invariant(where + ": uv count differs from vertex count");
    for (const auto& t : m.triangles)
      for (auto idx : t)
        if (idx >= m.vertices.size()) invariant(where + ": triangle index out of range");
    for (const auto& uv : m.uvs)
      if (!(uv.x >= 0.0 && uv.x <= 1.0 && uv.y >= 0.0 && uv.y <= 1.0)) invariant(where + ": uv outside [0,1]");
    for (const auto& v : m.vertices)
      if (!std::isfinite(v.x) || !std::isfinite(v.y)) invariant(where + ": non-finite vertex");
    if (m.texture < 0 || static_cast<std::size_t>(m.texture) >= model.atlases.size())
      invariant(where + ": texture index out of range");
    if (!(m.opacity >= 0.0 && m.opacity <= 1.0)) invariant(where + ": opacity outside [0,1]");
    if (m.label != kUnlabeled && !model.taxonomy.valid(m.label)) invariant(where + ": label out of range");
    for (const auto& g : m.path)
      if (g.empty()) invariant(where + ": empty group name in hierarchy path");
  }

  std::set<std::string> names;
  for (const auto& p : model.parameters) {
    if (p.name.empty()) invariant("parameter with empty name");
    if (!names.insert(p.name).second) invariant("duplicate parameter '" + p.name + "'");
    for (const auto* side : {&p.minus, &p.plus}) {
      for (const auto& [id, offsets] : *side) {
        auto idx = model.index_of(id);
        if (!idx) invariant("parameter '" + p.name + "' references unknown mesh " + std::to_string(id));
        if (offsets.size() != model.meshes[*idx].vertices.size())
          invariant("parameter '" + p.name + "': offset count for mesh " + std::to_string(id) +
                    " differs from its vertex count");
      }
    }
  }
}

void retie_draw_orders(CharacterModel& model) {
  std::map<int, int> counts;
  for (const auto& m : model.meshes) ++counts[m.draw_order];
  const bool tied = std::any_of(counts.begin(), counts.end(), [](const auto& kv) { return kv.second > 1; });
  if (!tied) return;
  const auto order = model.paint_order();
  for (std::size_t rank = 0; rank < order.size(); ++rank) model.meshes[order[rank]].draw_order = static_cast<int>(rank);
  logger()->warn("draw order ties broken by mesh id; draw orders renumbered 0..{}", order.size() - 1);
}

std::string model_to_json(const CharacterModel& model) {
  json root;
  root["format"] = "lcm";
  root["version"] = kFormatVersion;
  root["canvas"] = {{"width", model.canvas_width}, {"height", model.canvas_height}};

  json atlases = json::array();
  for (std::size_t i = 0; i < model.atlases.size(); ++i)
    atlases.push_back(
        {{"file", atlas_file_name(i)}, {"width", model.atlases[i].width()}, {"height", model.atlases[i].height()}});
  root["atlases"] = std::move(atlases);

  json meshes = json::array();
  for (const auto& m : model.meshes) {
    json jm;
    jm["id"] = m.id;
    jm["name"] = m.name;
    jm["path"] = m.path;
    jm["vertices"] = points_json(m.vertices);
    jm["uvs"] = points_json(m.uvs);
    json tris = json::array();
    for (const auto& t : m.triangles) tris.push_back(json::array({t[0], t[1], t[2]}));
    jm["triangles"] = std::move(tris);
    jm["texture"] = m.texture;
    jm["drawOrder"] = m.draw_order;
    jm["opacity"] = m.opacity;
    if (m.label != kUnlabeled) jm["label"] = m.label;
    if (m.blend != "normal") jm["blend"] = m.blend;
    meshes.push_back(std::move(jm));
  }
  root["meshes"] = std::move(meshes);

  json params = json::array();
  for (const auto& p : model.parameters) {
    json keyframes = json::array();
    auto side_json = [](double value, const std::map<int, std::vector<Vec2>>& offsets) {
      json list = json::array();
      for (const auto& [id, deltas] : offsets) list.push_back({{"mesh", id}, {"delta", points_json(deltas)}});
      return json{{"value", value}, {"offsets", std::move(list)}};
    };
    keyframes.push_back(side_json(-1, p.minus));
    keyframes.push_back(side_json(0, {}));
    keyframes.push_back(side_json(1, p.plus));
    params.push_back({{"name", p.name}, {"keyframes", std::move(keyframes)}});
  }
  root["parameters"] = std::move(params);
  root["taxonomy"] = model.taxonomy.classes;
  root["stratify"] = model.taxonomy.stratify;
  json meta = json::object();
  for (const auto& [k, v] : model.metadata) meta[k] = v;
  root["metadata"] = std::move(meta);
  return root.dump();
}

CharacterModel model_from_json(std::string_view text, std::vector<TextureAtlas> atlases, const ParseOptions& options) {
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    fail(ErrorCode::MalformedArchive, std::string("model.json is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw SchemaError("", "model.json must be an object");

  CharacterModel model;
  if (const auto* v = optional_field(root, "version"); v && as_int(*v, "/version") != kFormatVersion)
    throw SchemaError("/version", "unsupported format version");
  const auto& canvas = field(root, "canvas", "");
  model.canvas_width = static_cast<int>(as_int(field(canvas, "width", "/canvas"), "/canvas/width"));
  model.canvas_height = static_cast<int>(as_int(field(canvas, "height", "/canvas"), "/canvas/height"));

  const auto& jatlases = as_array(field(root, "atlases", ""), "/atlases");
  if (jatlases.size() != atlases.size())
    fail(ErrorCode::MalformedArchive, "model.json lists " + std::to_string(jatlases.size()) + " atlases but " +
                                          std::to_string(atlases.size()) + " were supplied");
  for (std::size_t i = 0; i < jatlases.size(); ++i) {
    const auto p = "/atlases/" + std::to_string(i);
    const auto w = as_int(field(jatlases[i], "width", p), p + "/width");
    const auto h = as_int(field(jatlases[i], "height", p), p + "/height");
    if (w != atlases[i].width() || h != atlases[i].height())
      throw SchemaError(p, "declared size differs from the PNG");
  }
  model.atlases = std::move(atlases);

  const auto& jmeshes = as_array(field(root, "meshes", ""), "/meshes");
  for (std::size_t i = 0; i < jmeshes.size(); ++i) {
    const auto p = "/meshes/" + std::to_string(i);
    const auto& jm = jmeshes[i];
    ArtMesh m;
    m.id = static_cast<int>(as_int(field(jm, "id", p), p + "/id"));
    m.name = as_string(field(jm, "name", p), p + "/name");
    m.path = as_string_list(field(jm, "path", p), p + "/path");
    m.vertices = as_points(field(jm, "vertices", p), p + "/vertices");
    m.uvs = as_points(field(jm, "uvs", p), p + "/uvs");
    const auto& tris = as_array(field(jm, "triangles", p), p + "/triangles");
    for (std::size_t t = 0; t < tris.size(); ++t) {
      const auto tp = p + "/triangles/" + std::to_string(t);
      const auto& tri = as_array(tris[t], tp);
      if (tri.size() != 3) throw SchemaError(tp, "expected three vertex indices");
      Triangle out{};
      for (int k = 0; k < 3; ++k) {
        const auto idx = as_int(tri[k], tp + "/" + std::to_string(k));
        if (idx < 0) throw SchemaError(tp, "negative vertex index");
        out[k] = static_cast<std::uint32_t>(idx);
      }
      m.triangles.push_back(out);
    }
    m.texture = static_cast<int>(as_int(field(jm, "texture", p), p + "/texture"));
    m.draw_order = static_cast<int>(as_int(field(jm, "drawOrder", p), p + "/drawOrder"));
    m.opacity = as_number(field(jm, "opacity", p), p + "/opacity");
    if (const auto* l = optional_field(jm, "label")) m.label = static_cast<ClassId>(as_int(*l, p + "/label"));
    if (const auto* b = optional_field(jm, "blend")) m.blend = as_string(*b, p + "/blend");
    if (m.blend != "normal")
      logger()->warn("mesh {} uses blend mode '{}'; rendered as normal", m.id, m.blend);
    model.meshes.push_back(std::move(m));
  }

  if (const auto* jparams = optional_field(root, "parameters")) {
    as_array(*jparams, "/parameters");
    for (std::size_t i = 0; i < jparams->size(); ++i) {
      const auto p = "/parameters/" + std::to_string(i);
      const auto& jp = (*jparams)[i];
      DeformParameter param;
      param.name = as_string(field(jp, "name", p), p + "/name");
      const auto& kfs = as_array(field(jp, "keyframes", p), p + "/keyframes");
      for (std::size_t k = 0; k < kfs.size(); ++k) {
        const auto kp = p + "/keyframes/" + std::to_string(k);
        const double value = as_number(field(kfs[k], "value", kp), kp + "/value");
        const auto& offsets = as_array(field(kfs[k], "offsets", kp), kp + "/offsets");
        std::map<int, std::vector<Vec2>> side;
        for (std::size_t o = 0; o < offsets.size(); ++o) {
          const auto op = kp + "/offsets/" + std::to_string(o);
          const int id = static_cast<int>(as_int(field(offsets[o], "mesh", op), op + "/mesh"));
          side[id] = as_points(field(offsets[o], "delta", op), op + "/delta");
        }
        if (value == -1.0) {
          param.minus = std::move(side);
        } else if (value == 1.0) {
          param.plus = std::move(side);
        } else if (value == 0.0) {
          for (const auto& [id, deltas] : side)
            for (const auto& d : deltas)
              if (d.x != 0.0 || d.y != 0.0)
                invariant("parameter '" + param.name + "': keyframe 0 must be the zero offset");
        } else {
          throw SchemaError(kp + "/value", "keyframe values must be -1, 0 or 1");
        }
      }
      model.parameters.push_back(std::move(param));
    }
  }

  if (const auto* jt = optional_field(root, "taxonomy")) {
    model.taxonomy.classes = as_string_list(*jt, "/taxonomy");
    model.taxonomy.stratify.clear();
    if (const auto* js = optional_field(root, "stratify")) model.taxonomy.stratify = as_string_list(*js, "/stratify");
  } else {
    model.taxonomy = Taxonomy::default_taxonomy();
  }

  if (const auto* jmeta = optional_field(root, "metadata")) {
    if (!jmeta->is_object()) throw SchemaError("/metadata", "expected an object");
    for (auto it = jmeta->begin(); it != jmeta->end(); ++it)
      model.metadata[it.key()] = it->is_string() ? it->get<std::string>() : it->dump();
  }

  if (options.retie) retie_draw_orders(model);
  validate_model(model);
  return model;
}

CharacterModel parse_model(std::span<const std::uint8_t> bytes, const ParseOptions& options) {
  auto entries = zip::read(bytes);
  const zip::Entry* doc = nullptr;
  std::map<std::string, const zip::Entry*> by_name;
  for (const auto& e : entries) {
    by_name[e.name] = &e;
    if (e.name == "model.json") doc = &e;
  }
  if (!doc) fail(ErrorCode::MalformedArchive, "archive has no model.json");
  const std::string_view text(reinterpret_cast<const char*>(doc->data.data()), doc->data.size());

  // Peek at the atlas list to know which PNGs to decode.
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    fail(ErrorCode::MalformedArchive, std::string("model.json is not valid JSON: ") + e.what());
  }
  std::vector<TextureAtlas> atlases;
  if (root.is_object() && root.contains("atlases") && root["atlases"].is_array()) {
    for (std::size_t i = 0; i < root["atlases"].size(); ++i) {
      const auto p = "/atlases/" + std::to_string(i);
      const auto file = as_string(field(root["atlases"][i], "file", p), p + "/file");
      auto it = by_name.find(file);
      if (it == by_name.end()) fail(ErrorCode::MalformedArchive, "archive is missing " + file);
      try {
        atlases.push_back({png::decode_rgba8(it->second->data)});
      } catch (const Error& e) {
        fail(ErrorCode::MalformedArchive, file + ": " + e.what());
      }
    }
  }
  return model_from_json(text, std::move(atlases), options);
}

std::vector<std::uint8_t> serialize_model(const CharacterModel& model) {
  std::vector<zip::Entry> entries;
  const auto doc = model_to_json(model);
  entries.push_back({"model.json", std::vector<std::uint8_t>(doc.begin(), doc.end())});
  for (std::size_t i = 0; i < model.atlases.size(); ++i)
    entries.push_back({atlas_file_name(i), png::encode_rgba8(model.atlases[i].pixels)});
  return zip::write(entries);
}

CharacterModel load_model(const std::filesystem::path& path, const ParseOptions& options) {
  return parse_model(png::read_file(path), options);
}

void save_model(const CharacterModel& model, const std::filesystem::path& path) {
  png::write_file(path, serialize_model(model));
}

std::vector<GroupNode> build_group_tree(const CharacterModel& model) {
  std::vector<GroupNode> nodes(1);
  std::map<std::vector<std::string>, int> index{{{}, 0}};
  for (const auto& m : model.meshes) {
    int current = 0;
    std::vector<std::string> prefix;
    for (const auto& g : m.path) {
      prefix.push_back(g);
      auto it = index.find(prefix);
      if (it == index.end()) {
        GroupNode node;
        node.name = g;
        node.path = prefix;
        node.parent = current;
        nodes.push_back(std::move(node));
        const int id = static_cast<int>(nodes.size()) - 1;
        nodes[current].children.push_back(id);
        it = index.emplace(prefix, id).first;
      }
      current = it->second;
    }
    nodes[current].meshes.push_back(m.id);
  }
  return nodes;
}

// ---- manifest -------------------------------------------------------------

DatasetManifest parse_manifest(std::string_view jsonl) {
  DatasetManifest manifest;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= jsonl.size()) {
    auto end = jsonl.find('\n', start);
    if (end == std::string_view::npos) end = jsonl.size();
    auto line = jsonl.substr(start, end - start);
    ++line_no;
    start = end + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
      if (end == jsonl.size()) break;
      continue;
    }
    json j;
    try {
      j = json::parse(line.begin(), line.end());
    } catch (const json::parse_error& e) {
      throw SchemaError("line " + std::to_string(line_no), e.what());
    }
    const auto p = "line " + std::to_string(line_no);
    ManifestEntry entry;
    entry.path = as_string(field(j, "path", p), p + "/path");
    entry.split = as_string(field(j, "split", p), p + "/split");
    if (const auto* pose = optional_field(j, "pose")) entry.pose = static_cast<int>(as_int(*pose, p + "/pose"));
    manifest.entries.push_back(std::move(entry));
    if (end == jsonl.size()) break;
  }
  return manifest;
}

std::string manifest_to_jsonl(const DatasetManifest& manifest) {
  std::string out;
  for (const auto& e : manifest.entries) {
    out += json{{"path", e.path}, {"split", e.split}, {"pose", e.pose}}.dump();
    out += '\n';
  }
  return out;
}

SplitCounts validate_manifest(const DatasetManifest& manifest, const std::optional<std::filesystem::path>& root) {
  SplitCounts counts;
  std::set<std::string> seen;
  for (const auto& e : manifest.entries) {
    if (!seen.insert(e.path).second) fail(ErrorCode::DuplicatePath, "duplicate manifest path " + e.path);
    if (e.split == "train") {
      ++counts.train;
    } else if (e.split == "val") {
      ++counts.val;
    } else if (e.split == "test") {
      ++counts.test;
    } else {
      fail(ErrorCode::UnknownSplit, "unknown split '" + e.split + "' for " + e.path);
    }
    if (root && !std::filesystem::exists(*root / e.path))
      fail(ErrorCode::IoFailure, "manifest path does not exist: " + (*root / e.path).string());
  }
  return counts;
}

}  // namespace lcm
