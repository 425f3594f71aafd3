// tactile: command-line front end for the depth-to-tactile data pipeline.

#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "tactile/config.hpp"
#include "tactile/ply.hpp"

namespace fs = std::filesystem;
using namespace tactile;

namespace {

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::vector<int> bins;
  std::optional<std::size_t> grasps;
  std::optional<std::size_t> objects;
  std::vector<double> densities;
  std::optional<unsigned> jobs;
  std::optional<std::string> baseline_pool;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "Master seed");
  cmd->add_option("--out", f.out, "Output directory")->capture_default_str();
  cmd->add_option("--bins", f.bins, "Depth-map bins M K")->expected(2);
  cmd->add_option("--grasps", f.grasps, "Grasps in total, spread over the objects");
  cmd->add_option("--objects", f.objects, "Number of objects");
  cmd->add_option("--densities", f.densities, "Densities in points/cm^3")->delimiter(',');
  cmd->add_option("--jobs", f.jobs, "Worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--baseline-pool", f.baseline_pool, "Baseline image pool: test or all")
      ->check(CLI::IsMember({"test", "all"}));
}

/// Defaults, then the config file, then flags.
struct Resolved {
  RunConfig config;
  nlohmann::json file;  // raw config file contents, {} if none
};

Resolved resolve(const CommonFlags& f) {
  Resolved r;
  r.file = f.config_path.empty() ? nlohmann::json::object() : read_json(f.config_path);
  RunConfig& c = r.config = config_from_json(r.file);
  if (f.seed) c.seed = *f.seed;
  if (!f.bins.empty()) {
    c.collect.m = f.bins[0];
    c.collect.k = f.bins[1];
  }
  if (f.grasps) c.grasps = *f.grasps;
  if (f.objects) c.objects = *f.objects;
  if (!f.densities.empty()) c.density.densities = f.densities;
  if (f.jobs) c.jobs = *f.jobs;
  if (f.baseline_pool) c.eval.pool = baseline_pool_from_string(*f.baseline_pool);
  sync(c);
  validate(c);
  return r;
}

bool file_sets(const nlohmann::json& file, const char* section, const char* key) {
  if (!section) return file.contains(key);
  return file.contains(section) && file.at(section).contains(key);
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

void write_run(const fs::path& out, const std::string& command, const RunConfig& c, nlohmann::json inputs = {}) {
  write_json(out / "run.json", {{"command", command},
                                {"schema_version", 1},
                                {"seed", c.seed},
                                {"inputs", inputs.is_null() ? nlohmann::json::object() : inputs},
                                {"config", config_to_json(c)}});
}

std::vector<Scene> make_scenes(const RunConfig& c) {
  std::vector<Scene> scenes;
  for (std::size_t i = 0; i < c.objects; ++i) scenes.push_back(make_scene(i, c.seed, c.table));
  return scenes;
}

nlohmann::json scene_sidecar(const Scene& s, const std::vector<DepthCamera>& cams, const std::string& id) {
  nlohmann::json cj = nlohmann::json::array();
  for (const auto& cam : cams) cj.push_back(camera_to_json(cam));
  return {{"object_id", id}, {"object", object_sidecar(s.object)}, {"cameras", cj}};
}

// ---------------------------------------------------------------------------

int cmd_synth(const CommonFlags& f) {
  const auto [c, file] = resolve(f);
  const fs::path out = f.out;
  const auto cams = default_rig(c.collect.rig);
  const auto scenes = make_scenes(c);
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const std::string id = object_name(i);
    write_ply(out / "objects" / (id + ".ply"), scenes[i].object.cloud);
    write_json(out / "objects" / (id + ".json"), object_sidecar(scenes[i].object));
    const LabeledCloud views = render_views(scenes[i], cams, derive_seed(c.seed, 0x5CE + i));
    write_ply(out / "scenes" / (id + ".ply"), views.cloud);
    write_json(out / "scenes" / (id + ".json"), scene_sidecar(scenes[i], cams, id));
    std::cout << id << ": " << to_string(scenes[i].object.kind) << ", " << scenes[i].object.cloud.size()
              << " model points, " << views.cloud.size() << " scene points\n";
  }
  write_run(out, "synth", c);
  return 0;
}

int cmd_segment(const CommonFlags& f, const std::string& input) {
  const auto [c, file] = resolve(f);
  const fs::path out = f.out;
  const PointCloud scene = read_ply(input);
  const PointCloud object = segment_object(scene, c.collect.segmentation, derive_seed(c.seed, 2));
  write_ply(out / "segmented.ply", object);
  write_run(out, "segment", c, {{"input", input}});
  std::cout << "segmented " << object.size() << " of " << scene.size() << " points\n";
  return 0;
}

int cmd_register(const CommonFlags& f, const std::string& model_path, const std::string& scene_path) {
  const auto [c, file] = resolve(f);
  const fs::path out = f.out;
  const PointCloud model = read_ply(model_path);
  const PointCloud scene = read_ply(scene_path);
  RegistrationConfig reg = c.collect.registration;
  if (reg.coarse.viewpoints.empty())
    for (const auto& cam : default_rig(c.collect.rig)) reg.coarse.viewpoints.push_back(cam.pose.translation);
  const PointCloud m = c.collect.model_leaf > 0 ? voxel_downsample(model, c.collect.model_leaf) : model;
  const RegistrationResult res = register_model(m, scene, reg, derive_seed(c.seed, 3));
  nlohmann::json j = registration_to_json(res);
  j["accepted"] = accepted(res, reg);
  write_json(out / "registration.json", j);
  write_run(out, "register", c, {{"model", model_path}, {"scene", scene_path}});
  std::cout << "fitness " << res.fitness << (j["accepted"].get<bool>() ? " (accepted)\n" : " (rejected)\n");
  require(j["accepted"].get<bool>(), ErrorCode::RegistrationFailed, "registration fitness above the acceptance bound");
  return 0;
}

/// Collects every object's pairs into <out>/dataset and returns the manifest.
PairManifest run_collect(const RunConfig& c, const fs::path& out) {
  const auto scenes = make_scenes(c);
  const auto per_object = grasps_per_object(c.grasps, c.objects);
  std::vector<Collection> parts;
  nlohmann::json log = nlohmann::json::array();
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const std::string id = object_name(i);
    parts.push_back(collect(scenes[i], scenes[i].object, id, per_object[i], c.collect, derive_seed(c.seed, 0xC0 + i)));
    const Collection& p = parts.back();
    log.push_back({{"object_id", id},
                   {"kind", to_string(scenes[i].object.kind)},
                   {"true_pose", pose_to_json(scenes[i].object.pose)},
                   {"registration", registration_to_json(p.registration)},
                   {"rotation_error_deg", rotation_error_deg(p.registration.pose.rotation, scenes[i].object.pose.rotation)},
                   {"translation_error_m", translation_error(p.registration.pose, scenes[i].object.pose)},
                   {"grasps_attempted", p.attempted},
                   {"grasps_succeeded", p.succeeded},
                   {"skipped", p.skipped}});
    std::cout << id << ": " << p.succeeded << "/" << p.attempted << " grasps, " << p.records.size() << " records\n";
  }
  const fs::path root = out / "dataset";
  PairManifest manifest = write_collection(parts, root, c.collect.m, c.collect.k);
  manifest.ratios = c.split_ratios;
  write_json(root / "collect_log.json", log);
  return manifest;
}

int cmd_collect(const CommonFlags& f) {
  const auto [c, file] = resolve(f);
  const fs::path out = f.out;
  const PairManifest m = run_collect(c, out);
  save_manifest(m, out / "dataset" / "manifest.json");
  write_run(out, "collect", c);
  std::cout << m.records.size() << " records\n";
  return 0;
}

void print_split(const PairManifest& m) {
  std::cout << "train " << m.in_split(Split::train).size() << " / val " << m.in_split(Split::val).size() << " / test "
            << m.in_split(Split::test).size() << "\n";
}

int cmd_split(const CommonFlags& f, std::string manifest_path) {
  const auto [c, file] = resolve(f);
  const fs::path out = f.out;
  if (manifest_path.empty()) manifest_path = (out / "dataset" / "manifest.json").string();
  const PairManifest m = split(load_manifest(manifest_path), c.split_ratios, c.seed);
  save_manifest(m, manifest_path);
  write_run(out, "split", c, {{"manifest", manifest_path}});
  print_split(m);
  return 0;
}

/// Renders the depth maps of one split as stand-in estimates.
std::size_t render_split(const PairManifest& m, const fs::path& root, Split which, const fs::path& dir, const RunConfig& c) {
  const auto records = m.in_split(which);
  fs::create_directories(dir);
  parallel_for(records.size(), c.jobs, [&](std::size_t i) {
    write_png(dir / (records[i]->id + ".png"), render(read_depth_map(root / records[i]->depth_path), c.collect.elastomer));
  });
  return records.size();
}

int cmd_render(const CommonFlags& f, const std::string& input, std::string manifest_path, const std::string& split_name) {
  const auto [c, file] = resolve(f);
  const fs::path out = f.out;
  if (!input.empty()) {
    const fs::path target = out / "render" / (fs::path(input).stem().string() + ".png");
    fs::create_directories(target.parent_path());
    write_png(target, render(read_depth_map(input), c.collect.elastomer));
    write_run(out, "render", c, {{"input", input}});
    std::cout << target.string() << "\n";
    return 0;
  }
  if (manifest_path.empty()) manifest_path = (out / "dataset" / "manifest.json").string();
  const PairManifest m = load_manifest(manifest_path);
  const Split which = split_from_string(split_name);
  const std::size_t n = render_split(m, fs::path(manifest_path).parent_path(), which, out / "estimates" / split_name, c);
  write_run(out, "render", c, {{"manifest", manifest_path}, {"split", split_name}});
  std::cout << n << " estimates rendered\n";
  return 0;
}

void write_report(const fs::path& dir, const EvalReport& r) {
  write_json(dir / "report.json", report_to_json(r));
  write_png(dir / "report.png", report_chart(r));
}

void print_report(const EvalReport& r) {
  std::cout.setf(std::ios::fixed);
  std::cout.precision(4);
  std::cout << "n " << r.n << ": ssim " << r.mean << " +/- " << r.stderr_ << ", baseline " << r.baseline_mean << " +/- "
            << r.baseline_stderr << " (" << r.baseline_n << " from " << r.baseline_pool << ")\n";
}

int cmd_evaluate(const CommonFlags& f, std::string manifest_path, std::string estimates) {
  const auto [c, file] = resolve(f);
  const fs::path out = f.out;
  if (manifest_path.empty()) manifest_path = (out / "dataset" / "manifest.json").string();
  if (estimates.empty()) estimates = (out / "estimates" / "test").string();
  const PairManifest m = load_manifest(manifest_path);
  const EvalReport r = evaluate(m, fs::path(manifest_path).parent_path(), estimates, c.seed, c.eval);
  write_report(out / "eval", r);
  write_run(out, "evaluate", c, {{"manifest", manifest_path}, {"estimates", estimates}});
  print_report(r);
  return 0;
}

int cmd_density(const CommonFlags& f) {
  const auto [c, file] = resolve(f);
  const fs::path out = f.out;
  std::vector<SyntheticObject> objects;
  for (const auto& s : make_scenes(c)) objects.push_back(s.object);
  const auto rows = density_study(objects, c.density, derive_seed(c.seed, 0xDE));
  write_text(out / "density" / "table.csv", density_csv(rows));
  write_png(out / "density" / "chart.png", density_chart(rows));
  write_run(out, "density-study", c);
  std::cout << density_csv(rows);
  return 0;
}

int cmd_demo(const CommonFlags& f) {
  auto [c, file] = resolve(f);
  if (!f.grasps && !file_sets(file, nullptr, "grasps")) c.grasps = 25;
  // A 25-grasp demo leaves fewer test images than the 15 the baseline draws.
  if (!f.baseline_pool && !file_sets(file, "evaluation", "baseline_pool")) c.eval.pool = BaselinePool::all;
  sync(c);
  const fs::path out = f.out;
  const fs::path root = out / "dataset";
  PairManifest m = run_collect(c, out);
  m = split(std::move(m), c.split_ratios, c.seed);
  save_manifest(m, root / "manifest.json");
  verify_manifest(load_manifest(root / "manifest.json"), root);
  print_split(m);
  render_split(m, root, Split::test, out / "estimates" / "test", c);
  const EvalReport r = evaluate(m, root, out / "estimates" / "test", c.seed, c.eval);
  write_report(out / "eval", r);
  write_run(out, "demo", c);
  print_report(r);
  return 0;
}

void report_error(const Error& e) {
  nlohmann::json j = {{"error", to_string(e.code())}, {"message", e.what()}, {"subjects", e.subjects()}};
  std::cerr << j.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Depth-to-tactile dataset pipeline"};
  app.require_subcommand(1);
  CommonFlags flags;
  std::string input, model, scene, manifest, estimates, split_name = "test";

  auto* synth = app.add_subcommand("synth", "Generate objects and two-camera scene captures");
  auto* segment = app.add_subcommand("segment", "Segment the object from a scene cloud");
  auto* reg = app.add_subcommand("register", "Register a model cloud to a segmented scene");
  auto* collect_cmd = app.add_subcommand("collect", "Collect (depth map, tactile image) pairs");
  auto* split_cmd = app.add_subcommand("split", "Assign train/val/test splits");
  auto* render_cmd = app.add_subcommand("render", "Render depth maps to tactile images");
  auto* eval = app.add_subcommand("evaluate", "Score estimates against ground truth");
  auto* density = app.add_subcommand("density-study", "SSIM as a function of point-cloud density");
  auto* demo = app.add_subcommand("demo", "synth, collect, split, render and evaluate in one run");
  for (auto* cmd : {synth, segment, reg, collect_cmd, split_cmd, render_cmd, eval, density, demo}) add_common(cmd, flags);
  segment->add_option("--input", input, "Scene PLY")->required()->check(CLI::ExistingFile);
  reg->add_option("--model", model, "Model PLY")->required()->check(CLI::ExistingFile);
  reg->add_option("--scene", scene, "Segmented scene PLY")->required()->check(CLI::ExistingFile);
  split_cmd->add_option("--manifest", manifest, "Manifest to split in place (default <out>/dataset/manifest.json)");
  render_cmd->add_option("--input", input, "Single depth map (.f32 with .json sidecar)");
  render_cmd->add_option("--manifest", manifest, "Manifest whose split to render");
  render_cmd->add_option("--split", split_name, "Split to render")->check(CLI::IsMember({"train", "val", "test"}));
  eval->add_option("--manifest", manifest, "Manifest (default <out>/dataset/manifest.json)");
  eval->add_option("--estimates", estimates, "Directory of <id>.png estimates (default <out>/estimates/test)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*synth) return cmd_synth(flags);
    if (*segment) return cmd_segment(flags, input);
    if (*reg) return cmd_register(flags, model, scene);
    if (*collect_cmd) return cmd_collect(flags);
    if (*split_cmd) return cmd_split(flags, manifest);
    if (*render_cmd) return cmd_render(flags, input, manifest, split_name);
    if (*eval) return cmd_evaluate(flags, manifest, estimates);
    if (*density) return cmd_density(flags);
    if (*demo) return cmd_demo(flags);
  } catch (const Error& e) {
    report_error(e);
    return 1;
  } catch (const std::exception& e) {
    report_error(Error(ErrorCode::Io, e.what()));
    return 1;
  }
  return 2;
}
