#include "lcm/cli.hpp"

#include <algorithm>
#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "lcm/errors.hpp"
#include "lcm/log.hpp"
#include "lcm/metrics.hpp"
#include "lcm/pipeline.hpp"
#include "lcm/png_io.hpp"
#include "lcm/service.hpp"
#include "lcm/session.hpp"

namespace lcm::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::string model;
  std::string taxonomy;
  std::uint64_t seed = 0;
  double tau_vis = kDefaultTauVis;
  double tau_bg = kDefaultTauBg;
  int k = 2;
  bool retie = false;
  std::string backend = "openmp";
  bool quiet = false;
};

std::string read_text(const fs::path& path) {
  const auto bytes = png::read_file(path);
  return {bytes.begin(), bytes.end()};
}

void write_text(const fs::path& path, std::string_view text) {
  png::write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

Taxonomy taxonomy_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw SchemaError("", std::string("taxonomy is not valid JSON: ") + e.what());
  }
  Taxonomy t;
  const json& classes = j.is_object() ? j.value("classes", json()) : j;
  if (!classes.is_array()) throw SchemaError("/classes", "expected an array of class names");
  for (const auto& c : classes) {
    if (!c.is_string()) throw SchemaError("/classes", "expected an array of class names");
    t.classes.push_back(c.get<std::string>());
  }
  if (j.is_object() && j.contains("stratify")) {
    if (!j["stratify"].is_array()) throw SchemaError("/stratify", "expected an array of class names");
    for (const auto& c : j["stratify"]) t.stratify.push_back(c.get<std::string>());
  }
  t.validate();
  return t;
}

class Context {
 public:
  Context(const Globals& g, std::ostream& out) : g_(g), out_(out) {}

  std::ostream& out() { return out_; }
  const Globals& globals() const { return g_; }

  const CharacterModel& model(const std::string& positional) {
    if (model_) return *model_;
    const std::string path = positional.empty() ? g_.model : positional;
    if (path.empty()) throw UsageError("a model is required (positional argument or --model)");
    model_ = load_model(path, {g_.retie});
    if (!g_.taxonomy.empty()) {
      model_->taxonomy = taxonomy_from_json(read_text(g_.taxonomy));
      validate_model(*model_);
    }
    return *model_;
  }

  const Scene& scene() {
    if (!scene_) scene_.emplace(*model_, backend());
    return *scene_;
  }

  Backend backend() const { return g_.backend == "serial" ? Backend::Serial : Backend::OpenMP; }

  PipelineOptions options() const {
    PipelineOptions o;
    o.tau_vis = g_.tau_vis;
    o.tau_bg = g_.tau_bg;
    o.k = g_.k;
    o.seed = g_.seed;
    return o;
  }

  LabelAssignment labels(const std::string& path) {
    if (path.empty()) return assignment_from_model(*model_);
    auto a = assignment_from_json(read_text(path), *model_);
    validate_assignment(*model_, a);
    return a;
  }

 private:
  const Globals& g_;
  std::ostream& out_;
  std::optional<CharacterModel> model_;
  std::optional<Scene> scene_;
};

void emit_json(Context& ctx, const std::string& path, const std::string& text) {
  if (path.empty())
    ctx.out() << text << "\n";
  else
    write_text(path, text);
}

void write_rgba(const fs::path& path, const RGBAImage& image) {
  png::write_file(path, png::encode_rgba8(png::quantize(image)));
}

RGBAImage opaque(const RGBImage& rgb) {
  RGBAImage out(rgb.width(), rgb.height());
  for (std::size_t p = 0; p < rgb.size(); ++p) {
    const Rgb& c = rgb.data()[p];
    out.data()[p] = {c.r, c.g, c.b, 1.f};
  }
  return out;
}

Mask mask_from_png(const fs::path& path) {
  auto m = png::decode_gray8(png::read_file(path));
  for (auto& v : m.data()) v = v != 0;
  return m;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::IoFailure, "cannot create directory " + dir.string());
}

std::atomic<Service*> g_running_service{nullptr};

extern "C" void handle_interrupt(int) {
  if (auto* s = g_running_service.load()) s->stop();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Layered character model toolkit", "lcm"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  Globals g;
  app.add_option("--model", g.model, "Model archive (.lcm)");
  app.add_option("--taxonomy", g.taxonomy, "Taxonomy JSON replacing the model's class list");
  app.add_option("--seed", g.seed, "Seed for clustering");
  app.add_option("--tau-vis", g.tau_vis, "Visibility threshold")->check(CLI::Range(0.0, 1.0));
  app.add_option("--tau-bg", g.tau_bg, "Background threshold for max-pooled label maps")->check(CLI::Range(0.0, 1.0));
  app.add_option("--k", g.k, "Strata per stratified class")->check(CLI::Range(2, 255));
  app.add_flag("--retie", g.retie, "Break duplicate draw orders by mesh id");
  app.add_option("--backend", g.backend, "Kernel backend")->check(CLI::IsMember({"serial", "openmp"}));
  app.add_flag("-q,--quiet", g.quiet, "Only log errors");

  std::string model_arg, output, labels_path;
  auto model_positional = [&](CLI::App* sub) { sub->add_option("model", model_arg, "Model archive (.lcm)"); };
  auto output_option = [&](CLI::App* sub, const char* what, bool required) {
    auto* o = sub->add_option("-o,--output", output, what);
    if (required) o->required();
  };
  auto labels_option = [&](CLI::App* sub) {
    sub->add_option("--labels", labels_path, "Label assignment JSON (default: labels stored in the model)");
  };

  std::string manifest_path, manifest_root;
  auto* validate = app.add_subcommand("validate", "Check a model archive and/or a dataset manifest");
  model_positional(validate);
  validate->add_option("--manifest", manifest_path, "Dataset manifest (JSONL)");
  validate->add_option("--root", manifest_root, "Directory manifest paths are relative to");

  std::string visible_list, class_filter;
  auto* render = app.add_subcommand("render", "Composite the model to PNG");
  model_positional(render);
  output_option(render, "Output PNG", true);
  render->add_option("--visible", visible_list, "Comma-separated mesh ids to draw");
  render->add_option("--classes", class_filter, "Class filter, e.g. Hair,Face or !Hair");
  labels_option(render);

  auto* masks = app.add_subcommand("masks", "Write one visibility mask PNG per mesh");
  model_positional(masks);
  output_option(masks, "Output directory", true);

  std::string scores_path, channels_path;
  auto* seed = app.add_subcommand("seed", "Vote mesh labels from a class score stack");
  model_positional(seed);
  seed->add_option("--scores", scores_path, "Score stack tensor")->required();
  seed->add_option("--channels", channels_path, "Sidecar JSON naming the channels");
  output_option(seed, "Output assignment JSON (default: stdout)", false);

  std::string label_map_path, map_out;
  auto* snap = app.add_subcommand("snap", "Snap a label map to mesh fragments");
  model_positional(snap);
  snap->add_option("--label-map", label_map_path, "Indexed label map PNG")->required();
  labels_option(snap);
  output_option(snap, "Output assignment JSON (default: stdout)", false);
  snap->add_option("--map-out", map_out, "Write the snapped label map PNG");

  auto* propagate = app.add_subcommand("propagate", "Fill unlabeled meshes from names and hierarchy");
  model_positional(propagate);
  labels_option(propagate);
  output_option(propagate, "Output assignment JSON (default: stdout)", false);

  auto* label_map = app.add_subcommand("label-map", "Render a label map PNG");
  model_positional(label_map);
  labels_option(label_map);
  label_map->add_option("--scores", scores_path, "Max-pool this score stack instead of rendering labels");
  label_map->add_option("--channels", channels_path, "Sidecar JSON naming the score channels");
  output_option(label_map, "Output PNG", true);

  auto* layers = app.add_subcommand("layers", "Write per-class RGBA, padded and depth layers");
  model_positional(layers);
  labels_option(layers);
  output_option(layers, "Output directory", true);

  std::string class_name, valid_out, tensor_out;
  auto* depth = app.add_subcommand("depth", "Render the pseudo-depth map");
  model_positional(depth);
  labels_option(depth);
  depth->add_option("--class", class_name, "Restrict to one class");
  depth->add_option("--valid", valid_out, "Write the validity mask PNG");
  depth->add_option("--tensor", tensor_out, "Write a float32 depth tensor");
  output_option(depth, "Output 16-bit PNG", false);

  std::string mode = "pixel";
  auto* stratify = app.add_subcommand("stratify", "Split one class into depth strata");
  model_positional(stratify);
  labels_option(stratify);
  stratify->add_option("--class", class_name, "Class to split")->required();
  stratify->add_option("--mode", mode, "Cluster per pixel or per mesh")->check(CLI::IsMember({"pixel", "mesh"}));
  output_option(stratify, "Output directory for stratum, hole and layer PNGs", false);

  auto* reconstruct = app.add_subcommand("reconstruct", "Recomposite class layers by depth");
  model_positional(reconstruct);
  labels_option(reconstruct);
  output_option(reconstruct, "Output PNG", false);

  bool no_stratify = false;
  auto* psd = app.add_subcommand("psd", "Export class layers as a layered PSD");
  model_positional(psd);
  labels_option(psd);
  psd->add_flag("--no-stratify", no_stratify, "Keep stratified classes as single layers");
  psd->add_option("--mode", mode, "Cluster per pixel or per mesh")->check(CLI::IsMember({"pixel", "mesh"}));
  output_option(psd, "Output PSD", true);

  std::string pred, gt, pred_mask, gt_mask, pred_depth, gt_depth;
  auto* metrics = app.add_subcommand("metrics", "Compare predictions against ground truth");
  metrics->add_option("--pred", pred, "Predicted RGBA PNG");
  metrics->add_option("--gt", gt, "Ground-truth RGBA PNG");
  metrics->add_option("--pred-mask", pred_mask, "Predicted mask PNG");
  metrics->add_option("--gt-mask", gt_mask, "Ground-truth mask PNG");
  metrics->add_option("--pred-depth", pred_depth, "Predicted depth tensor");
  metrics->add_option("--gt-depth", gt_depth, "Ground-truth depth tensor");
  output_option(metrics, "Output JSON (default: stdout)", false);

  std::string split = "train";
  auto* augment = app.add_subcommand("augment", "Write the 9-orientation pose grid and a manifest");
  model_positional(augment);
  augment->add_option("--split", split, "Manifest split")->check(CLI::IsMember({"train", "val", "test"}));
  output_option(augment, "Output directory", true);

  int port = 8080;
  std::string host = "127.0.0.1", static_dir;
  auto* serve = app.add_subcommand("serve", "Serve the annotation API");
  model_positional(serve);
  serve->add_option("--port", port, "TCP port")->check(CLI::Range(0, 65535));
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--static", static_dir, "Directory with the built UI");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  if (g.quiet) logger()->set_level(spdlog::level::err);
  Context ctx(g, out);

  try {
    if (validate->parsed()) {
      if (model_arg.empty() && g.model.empty() && manifest_path.empty())
        throw UsageError("validate needs a model or --manifest");
      if (!model_arg.empty() || !g.model.empty()) {
        const auto& m = ctx.model(model_arg);
        out << "meshes: " << m.meshes.size() << "\n"
            << "classes: " << m.taxonomy.size() << "\n"
            << "labeled: " << assignment_from_model(m).labeled_count() << "\n"
            << "canvas: " << m.canvas_width << "x" << m.canvas_height << "\n";
      }
      if (!manifest_path.empty()) {
        const auto manifest = parse_manifest(read_text(manifest_path));
        std::optional<fs::path> root;
        if (!manifest_root.empty()) root = manifest_root;
        const auto counts = validate_manifest(manifest, root);
        out << "train: " << counts.train << "\nval: " << counts.val << "\ntest: " << counts.test << "\n";
      }
    } else if (render->parsed()) {
      const auto& m = ctx.model(model_arg);
      Session session(m, ctx.options());
      if (!labels_path.empty()) {
        const auto a = ctx.labels(labels_path);
        for (const auto& [id, e] : a.entries) session.set_label(id, e.label);
      }
      std::set<int> visible;
      for (const auto& mesh : m.meshes) visible.insert(mesh.id);
      if (!visible_list.empty()) visible = parse_id_list(visible_list);
      if (!class_filter.empty()) {
        const auto allowed = filter_by_classes(session, class_filter);
        std::set<int> both;
        std::set_intersection(visible.begin(), visible.end(), allowed.begin(), allowed.end(),
                              std::inserter(both, both.begin()));
        visible = std::move(both);
      }
      const auto bytes = session.render_png(visible);
      png::write_file(output, bytes);
    } else if (masks->parsed()) {
      const auto& m = ctx.model(model_arg);
      const auto vis = ctx.scene().visibility(g.tau_vis);
      ensure_dir(output);
      for (const auto& mask : vis) {
        png::write_file(fs::path(output) / ("mask_" + std::to_string(mask.mesh_id) + ".png"),
                        png::encode_mask(mask.to_mask()));
        out << mask.mesh_id << " " << mask.count() << "\n";
      }
      (void)m;
    } else if (seed->parsed()) {
      const auto& m = ctx.model(model_arg);
      std::optional<std::string> sidecar;
      if (!channels_path.empty()) sidecar = read_text(channels_path);
      const auto stack = score_stack_from_file(png::read_file(scores_path), sidecar, m.taxonomy);
      const auto a = vote_seed_labels(m, stack, ctx.scene().visibility(g.tau_vis));
      emit_json(ctx, output, assignment_to_json(a, m.taxonomy));
    } else if (snap->parsed()) {
      const auto& m = ctx.model(model_arg);
      const auto prior = ctx.labels(labels_path);
      const auto map = decode_label_map(png::read_file(label_map_path), m.taxonomy);
      const auto result = snap_labels(m, map, ctx.scene().visibility(g.tau_vis), &prior);
      if (!map_out.empty()) png::write_file(map_out, encode_label_map(result.map, m.taxonomy));
      emit_json(ctx, output, assignment_to_json(result.assignment, m.taxonomy));
    } else if (propagate->parsed()) {
      const auto& m = ctx.model(model_arg);
      const auto vis = ctx.scene().visibility(g.tau_vis);
      const auto a = propagate_labels(m, ctx.labels(labels_path), visible_weights(m, vis));
      emit_json(ctx, output, assignment_to_json(a, m.taxonomy));
    } else if (label_map->parsed()) {
      const auto& m = ctx.model(model_arg);
      LabelMap map;
      if (!scores_path.empty()) {
        std::optional<std::string> sidecar;
        if (!channels_path.empty()) sidecar = read_text(channels_path);
        map = max_pool_labels(score_stack_from_file(png::read_file(scores_path), sidecar, m.taxonomy), g.tau_bg);
      } else {
        map = render_label_map(m, ctx.labels(labels_path), ctx.scene().visibility(g.tau_vis));
      }
      png::write_file(output, encode_label_map(map, m.taxonomy));
    } else if (layers->parsed() || reconstruct->parsed() || psd->parsed()) {
      const auto& m = ctx.model(model_arg);
      const CharacterModel labeled = with_labels(m, ctx.labels(labels_path));
      const Scene scene(labeled, ctx.backend());
      auto opts = ctx.options();
      opts.stratify = psd->parsed() && !no_stratify;
      opts.mode = mode == "mesh" ? StratifyMode::Mesh : StratifyMode::Pixel;
      const auto set = compute_layers(scene, opts);
      if (layers->parsed()) {
        ensure_dir(output);
        for (std::size_t i = 0; i < set.layers.size(); ++i) {
          const auto& name = labeled.taxonomy.name(set.layers[i].cls);
          write_rgba(fs::path(output) / (name + ".png"), set.layers[i].image);
          write_rgba(fs::path(output) / (name + "_padded.png"), opaque(set.layers[i].padded));
          png::write_file(fs::path(output) / (name + "_depth.png"),
                          png::encode_gray16(quantize_depth(set.depth_maps[i])));
          out << name << (set.layers[i].padded_fallback ? " (empty)" : "") << "\n";
        }
      } else if (reconstruct->parsed()) {
        if (set.layers.empty()) fail(ErrorCode::InvalidArgument, "no layers: no mesh carries a label");
        const auto r = lcm::reconstruct(set.layers, set.depth_maps);
        if (!output.empty()) write_rgba(output, r);
        const auto q = metric_psnr_ssim(r, scene.composite());
        MetricsReport report;
        report.psnr = q.psnr;
        report.ssim = q.ssim;
        out << metrics_to_json(report) << "\n";
      } else {
        auto stack = psd_stack(scene, set);
        if (stack.empty()) fail(ErrorCode::InvalidArgument, "no layers to export");
        export_psd(std::move(stack), labeled.canvas_width, labeled.canvas_height, output);
      }
    } else if (depth->parsed()) {
      const auto& m = ctx.model(model_arg);
      std::optional<ClassId> cls;
      if (!class_name.empty()) cls = m.taxonomy.require(class_name);
      const CharacterModel labeled = with_labels(m, ctx.labels(labels_path));
      const Scene scene(labeled, ctx.backend());
      const auto map = render_depth_map(scene, cls);
      if (output.empty() && valid_out.empty() && tensor_out.empty())
        throw UsageError("depth needs at least one of -o, --valid, --tensor");
      if (!output.empty()) png::write_file(output, png::encode_gray16(quantize_depth(map)));
      if (!valid_out.empty()) png::write_file(valid_out, png::encode_mask(map.valid));
      if (!tensor_out.empty()) png::write_file(tensor_out, depth_to_tensor(map));
    } else if (stratify->parsed()) {
      const auto& m = ctx.model(model_arg);
      const auto cls = m.taxonomy.require(class_name);
      const CharacterModel labeled = with_labels(m, ctx.labels(labels_path));
      const Scene scene(labeled, ctx.backend());
      const auto layer = extract_layer(scene, cls);
      Mask alpha(scene.width(), scene.height(), 0);
      for (std::size_t p = 0; p < alpha.size(); ++p) alpha.data()[p] = layer.image.data()[p].a > 0.f;
      const auto dmap = render_depth_map(scene, cls);
      const auto s = stratify_layer(scene, cls, dmap, alpha,
                                    {g.k, mode == "mesh" ? StratifyMode::Mesh : StratifyMode::Pixel, g.seed});
      json summary{{"class", class_name},
                   {"split", s.split},
                   {"centroids", s.centroids},
                   {"holePixels", count_set(s.hole_mask)}};
      json strata = json::object();
      for (const auto& [id, st] : s.mesh_strata) strata[std::to_string(id)] = st;
      summary["meshStrata"] = std::move(strata);
      if (!output.empty()) {
        ensure_dir(output);
        png::write_file(fs::path(output) / "strata.png", png::encode_gray8(s.assignments));
        png::write_file(fs::path(output) / "holes.png", png::encode_mask(s.hole_mask));
        const std::vector<SemanticLayer> one{layer};
        const std::vector<PseudoDepthMap> one_depth{dmap};
        const std::vector<Strata> one_strata{s};
        for (const auto& l : build_psd_stack(scene, one, one_depth, one_strata))
          write_rgba(fs::path(output) / (l.name + ".png"), l.image);
      }
      out << summary.dump(2) << "\n";
    } else if (metrics->parsed()) {
      MetricsReport report;
      bool any = false;
      if (!pred.empty() || !gt.empty()) {
        if (pred.empty() || gt.empty()) throw UsageError("--pred and --gt go together");
        const auto q = metric_psnr_ssim(png::dequantize(png::decode_rgba8(png::read_file(pred))),
                                        png::dequantize(png::decode_rgba8(png::read_file(gt))));
        report.psnr = q.psnr;
        report.ssim = q.ssim;
        any = true;
      }
      if (!pred_mask.empty() || !gt_mask.empty()) {
        if (pred_mask.empty() || gt_mask.empty()) throw UsageError("--pred-mask and --gt-mask go together");
        const auto a = mask_from_png(pred_mask), b = mask_from_png(gt_mask);
        report.mask_dice_loss = metric_dice_loss(a, b);
        report.mask_mse = metric_mask_mse(a, b);
        any = true;
      }
      if (!pred_depth.empty() || !gt_depth.empty()) {
        if (pred_depth.empty() || gt_depth.empty()) throw UsageError("--pred-depth and --gt-depth go together");
        const auto q = metric_depth(depth_from_tensor(png::read_file(pred_depth)),
                                    depth_from_tensor(png::read_file(gt_depth)));
        report.absrel = q.absrel;
        report.delta1 = q.delta1;
        any = true;
      }
      if (!any) throw UsageError("metrics needs at least one prediction/ground-truth pair");
      emit_json(ctx, output, metrics_to_json(report));
    } else if (augment->parsed()) {
      const auto& m = ctx.model(model_arg);
      ensure_dir(output);
      DatasetManifest manifest;
      for (const auto& posed : generate_orientation_grid(m)) {
        const std::string name = "pose_" + std::to_string(posed.pose_id) + ".lcm";
        save_model(posed.model, fs::path(output) / name);
        manifest.entries.push_back({name, split, posed.pose_id});
      }
      write_text(fs::path(output) / "manifest.jsonl", manifest_to_jsonl(manifest));
      out << manifest.entries.size() << " poses written\n";
    } else if (serve->parsed()) {
      const auto& m = ctx.model(model_arg);
      Session session(m, ctx.options());
      std::optional<fs::path> dir;
      if (!static_dir.empty()) dir = static_dir;
      Service service(session, dir);
      const int bound = service.bind(host, port);
      out << "listening on http://" << host << ":" << bound << "\n" << std::flush;
      g_running_service = &service;
      std::signal(SIGINT, handle_interrupt);
      std::signal(SIGTERM, handle_interrupt);
      service.listen();
      g_running_service = nullptr;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const SchemaError& e) {
    err << "error: " << to_string(e.code()) << " at " << (e.json_path().empty() ? "/" : e.json_path()) << ": "
        << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    err << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace lcm::cli
