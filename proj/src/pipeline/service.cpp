#include "lcm/service.hpp"

#include <charconv>

#include <httplib.h>
#include <json.hpp>

#include "lcm/errors.hpp"
#include "lcm/log.hpp"
#include "lcm/png_io.hpp"

#include <spdlog/spdlog.h>

namespace lcm {

using nlohmann::json;

namespace {

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownMesh:
    case ErrorCode::UnknownClass: return 404;
    case ErrorCode::Conflict: return 409;
    default: return 400;
  }
}

void send_error(httplib::Response& res, int status, std::string_view code, std::string_view message) {
  res.status = status;
  res.set_content(json{{"error", code}, {"message", message}}.dump(), "application/json");
}

template <typename F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const Error& e) {
      send_error(res, status_for(e.code()), to_string(e.code()), e.what());
    } catch (const json::exception& e) {
      send_error(res, 400, "MalformedBody", e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, "Internal", e.what());
    }
  };
}

std::optional<std::uint64_t> if_match(const httplib::Request& req) {
  if (!req.has_header("If-Match")) return std::nullopt;
  auto v = req.get_header_value("If-Match");
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') v = v.substr(1, v.size() - 2);
  std::uint64_t rev = 0;
  const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), rev);
  if (ec != std::errc{} || end != v.data() + v.size()) fail(ErrorCode::InvalidArgument, "malformed If-Match header");
  return rev;
}

json labels_json(const Session& session, const LabelAssignment& a, std::uint64_t revision) {
  json j = json::parse(assignment_to_json(a, session.model().taxonomy));
  j["revision"] = revision;
  return j;
}

void send_labels(const Session& session, httplib::Response& res) {
  // revision and assignment read separately; a concurrent writer may slip in
  // between, which the client resolves through the ETag on its next write
  const auto a = session.assignment();
  const auto rev = session.revision();
  res.set_header("ETag", std::to_string(rev));
  res.set_content(labels_json(session, a, rev).dump(), "application/json");
}

json model_json(const Session& session) {
  const auto& model = session.model();
  json meshes = json::array();
  for (std::size_t i = 0; i < model.meshes.size(); ++i) {
    const auto& m = model.meshes[i];
    const auto& r = session.scene().rasters()[i];
    meshes.push_back({{"id", m.id},
                      {"name", m.name},
                      {"path", m.path},
                      {"drawOrder", m.draw_order},
                      {"opacity", m.opacity},
                      {"bbox", {r.bbox.x0, r.bbox.y0, r.bbox.x1, r.bbox.y1}},
                      {"visiblePixels", session.masks()[i].count()}});
  }
  json groups = json::array();
  for (const auto& g : build_group_tree(model))
    groups.push_back({{"name", g.name}, {"path", g.path}, {"parent", g.parent}, {"children", g.children},
                      {"meshes", g.meshes}});
  json colors = json::array();
  for (std::size_t c = 0; c < model.taxonomy.size(); ++c) {
    const auto rgb = class_color(static_cast<ClassId>(c));
    colors.push_back({rgb[0], rgb[1], rgb[2]});
  }
  return {{"canvas", {{"width", model.canvas_width}, {"height", model.canvas_height}}},
          {"meshes", std::move(meshes)},
          {"groups", std::move(groups)},
          {"taxonomy", model.taxonomy.classes},
          {"stratify", model.taxonomy.stratify},
          {"classColors", std::move(colors)}};
}

int parse_mesh_id(const std::string& text) {
  int id = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), id);
  if (ec != std::errc{} || end != text.data() + text.size()) fail(ErrorCode::UnknownMesh, "no mesh '" + text + "'");
  return id;
}

}  // namespace

std::set<int> parse_id_list(std::string_view text) {
  std::set<int> ids;
  while (!text.empty()) {
    const auto comma = text.find(',');
    const auto item = text.substr(0, comma);
    int id = 0;
    const auto [end, ec] = std::from_chars(item.data(), item.data() + item.size(), id);
    if (item.empty() || ec != std::errc{} || end != item.data() + item.size())
      fail(ErrorCode::InvalidArgument, "malformed mesh id '" + std::string(item) + "'");
    ids.insert(id);
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return ids;
}

std::set<int> filter_by_classes(const Session& session, std::string_view filter) {
  const auto& taxonomy = session.model().taxonomy;
  std::set<ClassId> include, exclude;
  while (!filter.empty()) {
    const auto comma = filter.find(',');
    auto item = filter.substr(0, comma);
    const bool negated = !item.empty() && item.front() == '!';
    if (negated) item.remove_prefix(1);
    if (!item.empty()) (negated ? exclude : include).insert(taxonomy.require(item));
    if (comma == std::string_view::npos) break;
    filter.remove_prefix(comma + 1);
  }
  const auto a = session.assignment();
  std::set<int> out;
  for (const auto& [id, e] : a.entries) {
    if (!include.empty() && !include.count(e.label)) continue;
    if (e.labeled() && exclude.count(e.label)) continue;
    out.insert(id);
  }
  return out;
}

struct Service::Impl {
  Session& session;
  httplib::Server server;
  int port = -1;

  explicit Impl(Session& s) : session(s) {}
};

Service::Service(Session& session, std::optional<std::filesystem::path> static_dir)
    : impl_(std::make_unique<Impl>(session)) {
  auto& srv = impl_->server;
  Session& s = session;

  srv.Get("/model", guarded([&s](const httplib::Request&, httplib::Response& res) {
            res.set_content(model_json(s).dump(), "application/json");
          }));

  srv.Get("/render", guarded([&s](const httplib::Request& req, httplib::Response& res) {
            std::set<int> visible;
            for (const auto& m : s.model().meshes) visible.insert(m.id);
            if (req.has_param("visible")) visible = parse_id_list(req.get_param_value("visible"));
            if (req.has_param("classes")) {
              const auto allowed = filter_by_classes(s, req.get_param_value("classes"));
              std::set<int> both;
              for (int id : visible)
                if (allowed.count(id)) both.insert(id);
              for (int id : visible)
                if (!s.model().index_of(id)) fail(ErrorCode::UnknownMesh, "no mesh with id " + std::to_string(id));
              visible = std::move(both);
            }
            const auto png_bytes = s.render_png(visible);
            res.set_content(std::string(png_bytes.begin(), png_bytes.end()), "image/png");
          }));

  srv.Get(R"(/mesh/([^/]+)/mask)", guarded([&s](const httplib::Request& req, httplib::Response& res) {
            const int id = parse_mesh_id(req.matches[1]);
            const auto idx = s.model().index_of(id);
            if (!idx) fail(ErrorCode::UnknownMesh, "no mesh with id " + std::to_string(id));
            const auto png_bytes = png::encode_mask(s.masks()[*idx].to_mask());
            res.set_content(std::string(png_bytes.begin(), png_bytes.end()), "image/png");
          }));

  srv.Get(R"(/class/([^/]+)/preview)", guarded([&s](const httplib::Request& req, httplib::Response& res) {
            const auto cls = s.model().taxonomy.require(std::string(req.matches[1]));
            const auto png_bytes = png::encode_rgba8(png::quantize(s.class_preview(cls)));
            res.set_content(std::string(png_bytes.begin(), png_bytes.end()), "image/png");
          }));

  srv.Get("/labels", guarded([&s](const httplib::Request&, httplib::Response& res) { send_labels(s, res); }));

  srv.Post(R"(/labels/([^/]+))", guarded([&s](const httplib::Request& req, httplib::Response& res) {
             const int id = parse_mesh_id(req.matches[1]);
             if (!s.model().index_of(id)) fail(ErrorCode::UnknownMesh, "no mesh with id " + std::to_string(id));
             const json body = json::parse(req.body);
             if (!body.is_object() || !body.contains("class"))
               fail(ErrorCode::InvalidArgument, "body must be {\"class\": <name or null>}");
             ClassId cls = kUnlabeled;
             if (!body["class"].is_null()) {
               if (!body["class"].is_string()) fail(ErrorCode::InvalidArgument, "class must be a string or null");
               const auto found = s.model().taxonomy.find(body["class"].get<std::string>());
               if (!found) fail(ErrorCode::InvalidArgument, "unknown class '" + body["class"].get<std::string>() + "'");
               cls = *found;
             }
             s.set_label(id, cls, if_match(req));
             send_labels(s, res);
           }));

  srv.Post("/propagate", guarded([&s](const httplib::Request& req, httplib::Response& res) {
             try {
               s.propagate(if_match(req));
             } catch (const Error& e) {
               if (e.code() == ErrorCode::NoLabeledMesh) fail(ErrorCode::InvalidArgument, e.what());
               throw;
             }
             send_labels(s, res);
           }));

  srv.Post("/snap", guarded([&s](const httplib::Request& req, httplib::Response& res) {
             const std::span<const std::uint8_t> body(reinterpret_cast<const std::uint8_t*>(req.body.data()),
                                                      req.body.size());
             LabelMap map;
             try {
               map = decode_label_map(body, s.model().taxonomy);
             } catch (const Error& e) {
               fail(ErrorCode::InvalidArgument, std::string("label map upload: ") + e.what());
             }
             s.snap(map, if_match(req));
             send_labels(s, res);
           }));

  srv.Post("/undo", guarded([&s](const httplib::Request& req, httplib::Response& res) {
             s.undo(if_match(req));
             send_labels(s, res);
           }));

  srv.Get("/export/assignment", guarded([&s](const httplib::Request&, httplib::Response& res) {
            res.set_header("Content-Disposition", "attachment; filename=\"assignment.json\"");
            res.set_content(assignment_to_json(s.assignment(), s.model().taxonomy), "application/json");
          }));

  srv.Get("/export/psd", guarded([&s](const httplib::Request&, httplib::Response& res) {
            const auto bytes = s.export_psd();
            res.set_header("Content-Disposition", "attachment; filename=\"layers.psd\"");
            res.set_content(std::string(bytes.begin(), bytes.end()), "image/vnd.adobe.photoshop");
          }));

  if (static_dir && !srv.set_mount_point("/", static_dir->string()))
    fail(ErrorCode::IoFailure, "cannot serve static files from " + static_dir->string());
}

Service::~Service() { stop(); }

int Service::bind(const std::string& host, int port) {
  auto& srv = impl_->server;
  impl_->port = port == 0 ? srv.bind_to_any_port(host) : (srv.bind_to_port(host, port) ? port : -1);
  if (impl_->port < 0) fail(ErrorCode::IoFailure, "cannot bind " + host + ":" + std::to_string(port));
  return impl_->port;
}

void Service::listen() {
  logger()->info("serving on port {}", impl_->port);
  impl_->server.listen_after_bind();
}

void Service::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

bool Service::running() const { return impl_->server.is_running(); }

}  // namespace lcm
