#include "roomenv/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "roomenv/aggregate.hpp"
#include "roomenv/envelope.hpp"
#include "roomenv/ingest.hpp"
#include "roomenv/metrics.hpp"
#include "roomenv/normalstats.hpp"
#include "roomenv/random.hpp"
#include "roomenv/synthgen.hpp"

namespace roomenv::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

void Config::validate() const {
  auto bad = [](const std::string& m) { throw Error(Errc::InvalidArgument, "config: " + m); };
  if (!(rho > 0.0)) bad("rho must be positive");
  if (!(effective_tau() > 0.0)) bad("tau must be positive");
  if (!(eps_vis > 0.0)) bad("eps_vis must be positive");
  if (splat_radius < 0) bad("splat_radius must be >= 0");
  if (!(kappa > 0.0)) bad("kappa must be positive");
  if (n_kernels == 0 || n_eval == 0) bad("n_kernels and n_eval must be positive");
  if (f_thresholds.empty()) bad("f_thresholds must not be empty");
  for (double t : f_thresholds) {
    if (!(t > 0.0)) bad("f_thresholds must be positive");
  }
  if (layout_classes.empty()) bad("layout_classes must not be empty");
  if (threads < 1) bad("threads must be >= 1");
  if (chamfer != "bidirectional" && chamfer != "best-one-directional") {
    bad("chamfer must be 'bidirectional' or 'best-one-directional'");
  }
  if (ply_format != "binary" && ply_format != "ascii") bad("ply_format must be 'binary' or 'ascii'");
}

nlohmann::ordered_json Config::to_json() const {
  nlohmann::ordered_json j;
  j["rho"] = rho;
  j["tau"] = effective_tau();
  j["eps_vis"] = eps_vis;
  j["splat_radius"] = splat_radius;
  j["kappa"] = kappa;
  j["n_kernels"] = n_kernels;
  j["n_eval"] = n_eval;
  j["f_thresholds"] = f_thresholds;
  j["seed"] = seed;
  j["layout_classes"] = layout_classes;
  j["threads"] = threads;
  j["chamfer"] = chamfer;
  j["ply_format"] = ply_format;
  return j;
}

void Config::merge_json(const json& j) {
  if (!j.is_object()) throw Error(Errc::BadSpec, "config file must hold a JSON object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "rho") rho = value.get<double>();
      else if (key == "tau") tau = value.get<double>();
      else if (key == "eps_vis") eps_vis = value.get<double>();
      else if (key == "splat_radius") splat_radius = value.get<int>();
      else if (key == "kappa") kappa = value.get<double>();
      else if (key == "n_kernels") n_kernels = value.get<std::size_t>();
      else if (key == "n_eval") n_eval = value.get<std::size_t>();
      else if (key == "f_thresholds") f_thresholds = value.get<std::vector<double>>();
      else if (key == "seed") seed = value.get<std::uint64_t>();
      else if (key == "layout_classes") layout_classes = value.get<std::map<std::string, std::uint16_t>>();
      else if (key == "threads") threads = value.get<int>();
      else if (key == "chamfer") chamfer = value.get<std::string>();
      else if (key == "ply_format") ply_format = value.get<std::string>();
      else throw Error(Errc::BadSpec, "config: unknown key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw Error(Errc::BadSpec, std::string("config: ") + e.what());
  }
}

namespace {

// Flag values; unset fields fall through to the config file and defaults.
struct Overrides {
  std::string config_path;
  std::optional<double> rho, tau, eps_vis, kappa;
  std::optional<int> splat_radius, threads;
  std::optional<std::size_t> n_kernels, n_eval;
  std::optional<std::string> f_thresholds, layout_classes, chamfer;
  std::optional<std::uint64_t> seed;
  bool ascii = false;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    if (!item.empty()) parts.push_back(item);
  }
  return parts;
}

Config resolve(const Overrides& o) {
  Config c;
  if (!o.config_path.empty()) {
    try {
      c.merge_json(json::parse(read_text_file(o.config_path)));
    } catch (const json::parse_error& e) {
      throw Error(Errc::BadSpec, o.config_path + ": " + e.what());
    }
  }
  if (o.rho) c.rho = *o.rho;
  if (o.tau) c.tau = *o.tau;
  if (o.eps_vis) c.eps_vis = *o.eps_vis;
  if (o.kappa) c.kappa = *o.kappa;
  if (o.splat_radius) c.splat_radius = *o.splat_radius;
  if (o.threads) c.threads = *o.threads;
  if (o.n_kernels) c.n_kernels = *o.n_kernels;
  if (o.n_eval) c.n_eval = *o.n_eval;
  if (o.seed) c.seed = *o.seed;
  if (o.chamfer) c.chamfer = *o.chamfer;
  if (o.ascii) c.ply_format = "ascii";
  if (o.f_thresholds) {
    c.f_thresholds.clear();
    for (const auto& t : split(*o.f_thresholds, ',')) {
      try {
        c.f_thresholds.push_back(std::stod(t));
      } catch (const std::exception&) {
        throw Error(Errc::InvalidArgument, "bad threshold '" + t + "'");
      }
    }
  }
  if (o.layout_classes) {
    c.layout_classes.clear();
    for (const auto& item : split(*o.layout_classes, ',')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw Error(Errc::InvalidArgument, "layout class '" + item + "' is not name=id");
      try {
        c.layout_classes[item.substr(0, eq)] = static_cast<std::uint16_t>(std::stoul(item.substr(eq + 1)));
      } catch (const std::exception&) {
        throw Error(Errc::InvalidArgument, "layout class '" + item + "' has a bad id");
      }
    }
  }
  c.validate();
  return c;
}

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "JSON config file mirroring the Config fields");
  cmd->add_option("--threads", o.threads, "worker threads (outputs do not depend on it)");
  cmd->add_option("--seed", o.seed, "random seed");
}

void echo_config(const Config& c, const fs::path& dir) {
  fs::create_directories(dir);
  write_text_file(dir / "config.resolved.json", c.to_json().dump(2) + "\n");
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(Errc::Io, "cannot create '" + dir.string() + "': " + ec.message());
}

void write_depth_pngs(const EnvelopeSample& s, const fs::path& dir) {
  const int w = s.camera.width;
  const int h = s.camera.height;
  write_depth_png(depth_to_millimetres(camera_depth(s.visible_pointmap, s.visible_valid, s.camera), w, h),
                  dir / "visible_depth.png");
  write_depth_png(depth_to_millimetres(camera_depth(s.layout_pointmap, s.layout_valid, s.camera), w, h),
                  dir / "layout_depth.png");
}

// Relative paths of every envelope directory below root, sorted.
std::vector<fs::path> find_envelopes(const fs::path& root) {
  if (!fs::is_directory(root)) throw Error(Errc::MissingFile, "directory '" + root.string() + "' does not exist");
  std::vector<fs::path> found;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file() && entry.path().filename() == "meta.json" &&
        bundle_kind(entry.path().parent_path()) == "envelope") {
      found.push_back(fs::relative(entry.path().parent_path(), root));
    }
  }
  std::sort(found.begin(), found.end());
  if (found.empty()) throw Error(Errc::EmptyInput, "no envelope directories under '" + root.string() + "'");
  return found;
}

struct Prediction {
  Pointmap points_cam;
  Mask valid;
};

// Envelope directories contribute their layout surface; frame bundles
// their pointmap. Either way points are mapped through the bundle's camera.
Prediction load_prediction(const fs::path& dir) {
  if (!fs::exists(dir / "meta.json")) throw Error(Errc::MissingFile, "no prediction at '" + dir.string() + "'");
  Prediction p;
  if (bundle_kind(dir) == "envelope") {
    const EnvelopeSample s = read_envelope(dir);
    p.points_cam = to_camera_frame(s.layout_pointmap, s.layout_valid, s.camera);
    p.valid = s.layout_valid;
  } else {
    const FrameBundle f = read_frame(dir);
    p.points_cam = to_camera_frame(f.pointmap, f.valid, f.camera);
    p.valid = f.valid;
  }
  return p;
}

std::array<std::vector<std::string>, 3> split_scenes(std::vector<std::string> ids, std::uint64_t seed) {
  const std::size_t n = ids.size();
  const std::size_t holdout = n >= 3 ? std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(0.1 * n))) : 0;
  std::sort(ids.begin(), ids.end());
  Rng rng(seed, 0x5b1175ull);
  for (std::size_t i = n; i > 1; --i) std::swap(ids[i - 1], ids[static_cast<std::size_t>(rng.below(i))]);
  std::array<std::vector<std::string>, 3> out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t which = i < n - 2 * holdout ? 0 : (i < n - holdout ? 1 : 2);
    out[which].push_back(ids[i]);
  }
  for (auto& s : out) std::sort(s.begin(), s.end());
  return out;
}

int cmd_gen_fixtures(const Config& cfg, const std::string& preset, const std::vector<std::string>& specs,
                     const fs::path& out_dir, std::ostream& out) {
  std::vector<SceneSpec> scenes;
  std::string source;
  if (!specs.empty()) {
    for (const auto& path : specs) scenes.push_back(scene_from_json(read_text_file(path)));
    source = "spec";
  } else {
    scenes = make_preset(preset, cfg.seed);
    source = preset;
  }
  std::vector<std::string> ids;
  for (const auto& s : scenes) {
    if (std::find(ids.begin(), ids.end(), s.id) != ids.end()) throw Error(Errc::BadSpec, "duplicate scene id '" + s.id + "'");
    ids.push_back(s.id);
  }
  ensure_dir(out_dir);
  nlohmann::ordered_json manifest;
  manifest["source"] = source;
  manifest["seed"] = cfg.seed;
  manifest["scenes"] = json::array();
  for (const auto& scene : scenes) {
    const fs::path scene_dir = out_dir / scene.id;
    ensure_dir(scene_dir);
    write_text_file(scene_dir / "scene.json", scene_to_json(scene));
    nlohmann::ordered_json entry;
    entry["id"] = scene.id;
    entry["frames"] = json::array();
    for (std::size_t i = 0; i < scene.cameras.size(); ++i) {
      const FrameBundle frame = render_frame(scene, i, cfg.threads);
      write_frame(frame, scene_dir / "frames" / frame.frame_id);
      const EnvelopeSample env = oracle_envelope(scene, i, cfg.threads);
      const fs::path env_dir = scene_dir / "envelopes" / frame.frame_id;
      write_envelope(env, env_dir);
      write_depth_pngs(env, env_dir);
      entry["frames"].push_back(frame.frame_id);
    }
    manifest["scenes"].push_back(entry);
  }
  const auto splits = split_scenes(ids, cfg.seed);
  manifest["splits"] = {{"train", splits[0]}, {"val", splits[1]}, {"test", splits[2]}};
  write_text_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
  echo_config(cfg, out_dir);
  out << "wrote " << scenes.size() << " scenes to " << out_dir.string() << "\n";
  return kSuccess;
}

std::vector<FrameBundle> read_frames(const fs::path& frames_dir) {
  std::vector<FrameBundle> frames;
  for (const auto& dir : list_bundle_dirs(frames_dir)) frames.push_back(read_frame(dir));
  if (frames.empty()) throw Error(Errc::EmptyInput, "no frame bundles in '" + frames_dir.string() + "'");
  return frames;
}

int cmd_build(const Config& cfg, const fs::path& frames_dir, const fs::path& out_ply, std::ostream& out) {
  const auto frames = read_frames(frames_dir);
  const AttributedPointCloud cloud = aggregate_frames(frames);
  const AttributedPointCloud down = voxel_downsample(cloud, VoxelParams{cfg.rho, Vec3::Zero()});
  const fs::path parent = out_ply.has_parent_path() ? out_ply.parent_path() : fs::path(".");
  ensure_dir(parent);
  write_ply(down, out_ply, cfg.ply_format == "ascii" ? PlyFormat::Ascii : PlyFormat::BinaryLittleEndian);
  echo_config(cfg, parent);
  out << "aggregated " << cloud.size() << " points from " << frames.size() << " frames; kept " << down.size()
      << " after voxel downsampling\n";
  return kSuccess;
}

int cmd_render_envelope(const Config& cfg, const fs::path& frames_dir, const fs::path& cloud_ply,
                        const fs::path& out_dir, std::ostream& out, std::ostream& err) {
  const AttributedPointCloud cloud = read_ply(cloud_ply);
  const LayoutClassSet classes(cfg.layout_classes);
  const AttributedPointCloud layout = filter_layout(cloud, classes);
  const auto frames = read_frames(frames_dir);
  const RasterConfig raster{cfg.effective_tau(), cfg.splat_radius};
  EnvelopeChecks checks;
  checks.eps_vis = cfg.eps_vis;
  checks.classes = classes;
  ensure_dir(out_dir);
  for (const auto& frame : frames) {
    EnvelopeDiagnostics diag;
    const EnvelopeSample s = build_envelope(frame, layout, raster, checks, &diag, cfg.threads);
    if (diag.layout_in_front > 0) {
      err << "warning: " << frame.frame_id << ": layout in front of visible surface at " << diag.layout_in_front
          << " pixels\n";
    }
    const fs::path dir = out_dir / (frame.frame_id.empty() ? "frame" : frame.frame_id);
    write_envelope(s, dir);
    write_depth_pngs(s, dir);
  }
  echo_config(cfg, out_dir);
  out << "rendered " << frames.size() << " envelopes from " << layout.size() << " layout points\n";
  return kSuccess;
}

int cmd_eval(const Config& cfg, const fs::path& pred_dir, const fs::path& gt_dir, const fs::path& out_dir,
             std::ostream& out) {
  EvalOptions options;
  options.eps_vis = cfg.eps_vis;
  options.thresholds = cfg.f_thresholds;
  options.chamfer = cfg.chamfer == "bidirectional" ? ChamferPolicy::Bidirectional : ChamferPolicy::BestOneDirectional;
  std::vector<ImageReport> reports;
  for (const auto& rel : find_envelopes(gt_dir)) {
    const EnvelopeSample gt = read_envelope(gt_dir / rel);
    const Prediction pred = load_prediction(pred_dir / rel);
    ImageReport r = evaluate_sample(pred.points_cam, pred.valid, gt, options);
    r.frame_id = rel.generic_string();
    reports.push_back(std::move(r));
  }
  const EvalSummary summary = summarize(reports, options.thresholds.size());
  ensure_dir(out_dir);
  write_text_file(out_dir / "report.csv", report_csv(reports, options.thresholds));
  const std::string js = summary_json(summary, options.thresholds);
  write_text_file(out_dir / "summary.json", js);
  echo_config(cfg, out_dir);
  out << js;
  return kSuccess;
}

int cmd_normal_stats(const Config& cfg, const fs::path& pred_dir, const fs::path& gt_dir, const fs::path& out_file,
                     std::ostream& out) {
  std::vector<NormalStatsInput> inputs;
  for (const auto& rel : find_envelopes(gt_dir)) {
    const EnvelopeSample gt = read_envelope(gt_dir / rel);
    Prediction pred = load_prediction(pred_dir / rel);
    if (!pred.points_cam.same_shape(gt.camera.width, gt.camera.height)) {
      throw Error(Errc::ShapeMismatch, "prediction '" + rel.string() + "' does not match the ground-truth resolution");
    }
    inputs.push_back({std::move(pred.points_cam), std::move(pred.valid), classify_visibility(gt, cfg.eps_vis)});
  }
  NormalStatsParams params;
  params.seed = cfg.seed;
  params.n_kernels = cfg.n_kernels;
  params.n_eval = cfg.n_eval;
  params.kappa = cfg.kappa;
  params.threads = cfg.threads;
  const std::string js = normal_stats_json(normal_likelihood_analysis(inputs, params));
  if (!out_file.empty()) {
    const fs::path parent = out_file.has_parent_path() ? out_file.parent_path() : fs::path(".");
    ensure_dir(parent);
    write_text_file(out_file, js);
    echo_config(cfg, parent);
  }
  out << js;
  return kSuccess;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Room envelope dataset construction and layout evaluation"};
  app.require_subcommand(1);
  Overrides o;
  std::string preset = "tiny";
  std::vector<std::string> specs;
  std::string out_path, frames_dir, cloud_path, pred_dir, gt_dir, in_dir;

  auto* gen = app.add_subcommand("gen-fixtures", "write a synthetic mini-dataset with oracle envelopes");
  add_common(gen, o);
  gen->add_option("--preset", preset, "builtin preset: tiny or furnished");
  gen->add_option("--spec", specs, "SceneSpec JSON file(s) instead of a preset");
  gen->add_option("--out", out_path, "output directory")->required();

  auto* build = app.add_subcommand("build", "aggregate frames into a voxel-downsampled PLY cloud");
  add_common(build, o);
  build->add_option("frames_dir", frames_dir, "directory of frame bundles")->required();
  build->add_option("out_cloud", out_path, "output .ply")->required();
  build->add_option("--rho", o.rho, "voxel size in metres");
  build->add_flag("--ascii", o.ascii, "write ASCII PLY");

  auto* render = app.add_subcommand("render-envelope", "render layout pointmaps for every frame");
  add_common(render, o);
  render->add_option("frames_dir", frames_dir, "directory of frame bundles")->required();
  render->add_option("cloud", cloud_path, "scene cloud .ply")->required();
  render->add_option("out_dir", out_path, "output directory")->required();
  render->add_option("--rho", o.rho, "voxel size in metres (tau defaults to 2*rho)");
  render->add_option("--tau", o.tau, "depth threshold in metres");
  render->add_option("--splat-radius", o.splat_radius, "point footprint half-width in pixels");
  render->add_option("--eps-vis", o.eps_vis, "seen/unseen depth tolerance in metres");
  render->add_option("--layout-classes", o.layout_classes, "name=id,... layout class mapping");

  auto* eval = app.add_subcommand("eval", "score predicted layout pointmaps against envelopes");
  add_common(eval, o);
  eval->add_option("pred_dir", pred_dir, "predictions (mirrors gt_dir layout)")->required();
  eval->add_option("gt_dir", gt_dir, "ground-truth envelope directories")->required();
  eval->add_option("--out", out_path, "report directory")->required();
  eval->add_option("--eps-vis", o.eps_vis, "seen/unseen depth tolerance in metres");
  eval->add_option("--f-thresholds", o.f_thresholds, "comma-separated F-score thresholds (default 0.1,0.05)");
  eval->add_option("--chamfer", o.chamfer, "bidirectional or best-one-directional");

  auto* normals = app.add_subcommand("normal-stats", "vMF likelihood of unseen-region normals");
  add_common(normals, o);
  normals->add_option("pred_dir", pred_dir, "predictions (mirrors gt_dir layout)")->required();
  normals->add_option("gt_dir", gt_dir, "ground-truth envelope directories")->required();
  normals->add_option("--out", out_path, "output JSON file");
  normals->add_option("--eps-vis", o.eps_vis, "seen/unseen depth tolerance in metres");
  normals->add_option("--kappa", o.kappa, "vMF concentration");
  normals->add_option("--n-kernels", o.n_kernels, "kernel centres per image");
  normals->add_option("--n-eval", o.n_eval, "evaluation samples per image");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream msg;
    const int code = app.exit(e, msg, msg);
    (code == 0 ? out : err) << msg.str();
    return code == 0 ? kSuccess : kValidationError;
  }

  try {
    const Config cfg = resolve(o);
    if (gen->parsed()) return cmd_gen_fixtures(cfg, preset, specs, out_path, out);
    if (build->parsed()) return cmd_build(cfg, frames_dir, out_path, out);
    if (render->parsed()) return cmd_render_envelope(cfg, frames_dir, cloud_path, out_path, out, err);
    if (eval->parsed()) return cmd_eval(cfg, pred_dir, gt_dir, out_path, out);
    if (normals->parsed()) return cmd_normal_stats(cfg, pred_dir, gt_dir, out_path, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.is_io() ? kIoError : kValidationError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kIoError;
  }
  return kValidationError;
}

}  // namespace roomenv::cli
