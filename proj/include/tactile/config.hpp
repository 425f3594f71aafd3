#pragma once

#include "tactile/evaluation.hpp"

namespace tactile {

/// Every tunable of a CLI run. Loaded from one JSON file; keys that are
/// absent keep their defaults, unknown keys are rejected.
struct RunConfig {
  std::uint64_t seed = 0;
  std::size_t objects = 3;
  std::size_t grasps = 289;  // total over all objects
  unsigned jobs = 1;
  std::array<double, 3> split_ratios{0.70, 0.15, 0.15};
  CollectConfig collect;
  TableParams table;
  EvalOptions eval;
  DensityStudyConfig density;
};

namespace detail {

inline void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  require(j.is_object(), ErrorCode::InvalidParams, where + " must be an object", {where});
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    require(ok, ErrorCode::InvalidParams, "unknown key '" + key + "' in " + where, {where + "." + key});
  }
}

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

inline Vec3 read_vec3(const nlohmann::json& j, const std::string& where) {
  const auto v = j.get<std::vector<double>>();
  require(v.size() == 3, ErrorCode::InvalidParams, where + " needs 3 values", {where});
  return Vec3(v[0], v[1], v[2]);
}

inline nlohmann::json vec3(const Vec3& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); }

}  // namespace detail

/// Propagates shared settings (bins, sensor, renderer, jobs) into the
/// sub-configs that carry their own copies.
inline void sync(RunConfig& c) {
  c.collect.jobs = c.jobs;
  c.eval.jobs = c.jobs;
  c.density.jobs = c.jobs;
  c.density.m = c.collect.m;
  c.density.k = c.collect.k;
  c.density.sensor = c.collect.sensor;
  c.density.grasp = c.collect.grasp;
  c.density.elastomer = c.collect.elastomer;
  c.density.ssim = c.eval.ssim;
  c.density.max_gap = c.collect.max_gap;
}

inline void validate(const RunConfig& c) {
  auto check = [](bool ok, const std::string& field, const std::string& what) {
    require(ok, ErrorCode::InvalidParams, field + " " + what, {field});
  };
  check(c.objects >= 1, "objects", "must be >= 1");
  check(c.jobs >= 1, "jobs", "must be >= 1");
  check(valid_ratios(c.split_ratios), "split.ratios", "must be in [0, 1] and sum to 1");
  const auto& k = c.collect;
  check(k.m >= 1 && k.k >= 1 && k.m <= 4096 && k.k <= 4096, "bins", "must be in [1, 4096]");
  check(k.sensor.valid(), "sensor", "needs positive x_t, y_t, z_t, y_far and pad >= 1");
  check(k.grasp.valid(), "grasp", "needs offset_fraction in [0, 1] and 0 <= depth_min <= depth_max <= 1");
  check(k.segmentation.workspace.valid(), "segmentation.workspace", "has min > max");
  check(k.segmentation.plane_dist > 0, "segmentation.plane_dist", "must be > 0");
  check(k.segmentation.plane_min_frac > 0 && k.segmentation.plane_min_frac <= 1, "segmentation.plane_min_frac",
        "must be in (0, 1]");
  check(k.segmentation.cluster_tol > 0, "segmentation.cluster_tol", "must be > 0");
  check(k.segmentation.cluster_min <= k.segmentation.cluster_max, "segmentation.cluster_min", "must be <= cluster_max");
  const auto& r = k.registration;
  check(r.coarse.feature_radius > 0, "registration.feature_radius", "must be > 0");
  check(r.coarse.leaf >= 0, "registration.coarse_leaf", "must be >= 0");
  check(r.coarse.iterations >= 1, "registration.coarse_iterations", "must be >= 1");
  check(r.coarse.inlier_dist > 0, "registration.inlier_dist", "must be > 0");
  check(r.icp.max_iterations >= 1, "registration.icp_max_iterations", "must be >= 1");
  check(r.icp.max_correspondence_dist > 0, "registration.icp_max_correspondence", "must be > 0");
  check(r.icp.transform_epsilon >= 0, "registration.icp_epsilon", "must be >= 0");
  check(r.candidates >= 1, "registration.candidates", "must be >= 1");
  check(r.restarts >= 0, "registration.restarts", "must be >= 0");
  check(r.acceptance_fitness > 0, "registration.acceptance_fitness", "must be > 0");
  check(k.max_gap >= 0, "depth.max_gap", "must be >= 0");
  check(k.model_leaf >= 0, "registration.model_leaf", "must be >= 0");
  check(k.min_success >= 0 && k.min_success <= 1, "collect.min_success", "must be in [0, 1]");
  check(k.elastomer.valid(), "elastomer", "needs unit light directions and smoothing_radius >= 0");
  check(k.rig.range > 0, "camera.range", "must be > 0");
  check(k.rig.noise_sigma >= 0, "camera.noise_sigma", "must be >= 0");
  check(c.table.size_x > 0 && c.table.size_y > 0 && c.table.spacing > 0, "table", "extent and spacing must be > 0");
  check(c.eval.ssim.valid(), "ssim", "needs an odd window >= 1 and positive sigma, k1, k2, dynamic_range");
  check(c.eval.baseline_n >= 1, "evaluation.baseline_n", "must be >= 1");
  check(!c.density.densities.empty(), "density.densities", "must not be empty");
  for (double d : c.density.densities) check(d > 0, "density.densities", "must be positive");
  check(c.density.grasps >= 1, "density.grasps", "must be >= 1");
}

inline nlohmann::json config_to_json(const RunConfig& c) {
  const auto& k = c.collect;
  const auto& r = k.registration;
  nlohmann::json viewpoints = nlohmann::json::array();
  for (const auto& v : r.coarse.viewpoints) viewpoints.push_back(detail::vec3(v));
  return {
      {"seed", c.seed},
      {"objects", c.objects},
      {"grasps", c.grasps},
      {"jobs", c.jobs},
      {"bins", {k.m, k.k}},
      {"split", {{"ratios", {c.split_ratios[0], c.split_ratios[1], c.split_ratios[2]}}}},
      {"sensor",
       {{"x_t", k.sensor.x_t}, {"y_t", k.sensor.y_t}, {"z_t", k.sensor.z_t}, {"pad", k.sensor.pad}, {"y_far", k.sensor.y_far}}},
      {"grasp",
       {{"offset_fraction", k.grasp.offset_fraction},
        {"depth_min", k.grasp.depth_min},
        {"depth_max", k.grasp.depth_max},
        {"miss_clearance", k.grasp.miss_clearance}}},
      {"depth", {{"max_gap", k.max_gap}}},
      {"collect", {{"min_success", k.min_success}}},
      {"segmentation",
       {{"workspace_min", detail::vec3(k.segmentation.workspace.min)},
        {"workspace_max", detail::vec3(k.segmentation.workspace.max)},
        {"plane_dist", k.segmentation.plane_dist},
        {"plane_min_frac", k.segmentation.plane_min_frac},
        {"plane_iterations", k.segmentation.plane_iterations},
        {"cluster_tol", k.segmentation.cluster_tol},
        {"cluster_min", k.segmentation.cluster_min},
        {"cluster_max", k.segmentation.cluster_max}}},
      {"registration",
       {{"model_leaf", k.model_leaf},
        {"feature_radius", r.coarse.feature_radius},
        {"coarse_leaf", r.coarse.leaf},
        {"coarse_iterations", r.coarse.iterations},
        {"pair_iterations", r.coarse.pair_iterations},
        {"inlier_dist", r.coarse.inlier_dist},
        {"viewpoints", viewpoints},
        {"candidates", r.candidates},
        {"candidate_icp_iterations", r.candidate_icp_iterations},
        {"select_dist", r.select_dist},
        {"icp_max_iterations", r.icp.max_iterations},
        {"icp_epsilon", r.icp.transform_epsilon},
        {"icp_max_correspondence", r.icp.max_correspondence_dist},
        {"restarts", r.restarts},
        {"restart_rotation_deg", r.restart_rotation_deg},
        {"restart_translation", r.restart_translation},
        {"acceptance_fitness", r.acceptance_fitness}}},
      {"camera",
       {{"range", k.rig.range},
        {"azimuth_deg", k.rig.azimuth_deg},
        {"elevation_deg", k.rig.elevation_deg},
        {"target", detail::vec3(k.rig.target)},
        {"noise_sigma", k.rig.noise_sigma}}},
      {"table", {{"size_x", c.table.size_x}, {"size_y", c.table.size_y}, {"spacing", c.table.spacing}}},
      {"elastomer", elastomer_to_json(k.elastomer)},
      {"ssim",
       {{"window", c.eval.ssim.window},
        {"sigma", c.eval.ssim.sigma},
        {"k1", c.eval.ssim.k1},
        {"k2", c.eval.ssim.k2},
        {"dynamic_range", c.eval.ssim.dynamic_range}}},
      {"evaluation", {{"baseline_n", c.eval.baseline_n}, {"baseline_pool", to_string(c.eval.pool)}}},
      {"density", {{"densities", c.density.densities}, {"grasps", c.density.grasps}}},
  };
}

/// Overlays `j` onto the defaults in `c` and validates the result.
inline RunConfig config_from_json(const nlohmann::json& j, RunConfig c = {}) {
  using detail::check_keys;
  using detail::read;
  try {
    check_keys(j, {"seed", "objects", "grasps", "jobs", "bins", "split", "sensor", "grasp", "depth", "collect",
                   "segmentation", "registration", "camera", "table", "elastomer", "ssim", "evaluation", "density"},
               "config");
    read(j, "seed", c.seed);
    read(j, "objects", c.objects);
    read(j, "grasps", c.grasps);
    read(j, "jobs", c.jobs);
    auto& k = c.collect;
    if (j.contains("bins")) {
      const auto b = j.at("bins").get<std::vector<int>>();
      require(b.size() == 2, ErrorCode::InvalidParams, "bins needs [m, k]", {"bins"});
      k.m = b[0];
      k.k = b[1];
    }
    if (j.contains("split")) {
      const auto& s = j.at("split");
      check_keys(s, {"ratios"}, "split");
      if (s.contains("ratios")) {
        const auto v = s.at("ratios").get<std::vector<double>>();
        require(v.size() == 3, ErrorCode::InvalidParams, "split.ratios needs 3 values", {"split.ratios"});
        c.split_ratios = {v[0], v[1], v[2]};
      }
    }
    if (j.contains("sensor")) {
      const auto& s = j.at("sensor");
      check_keys(s, {"x_t", "y_t", "z_t", "pad", "y_far"}, "sensor");
      read(s, "x_t", k.sensor.x_t);
      read(s, "y_t", k.sensor.y_t);
      read(s, "z_t", k.sensor.z_t);
      read(s, "pad", k.sensor.pad);
      read(s, "y_far", k.sensor.y_far);
    }
    if (j.contains("grasp")) {
      const auto& s = j.at("grasp");
      check_keys(s, {"offset_fraction", "depth_min", "depth_max", "miss_clearance"}, "grasp");
      read(s, "offset_fraction", k.grasp.offset_fraction);
      read(s, "depth_min", k.grasp.depth_min);
      read(s, "depth_max", k.grasp.depth_max);
      read(s, "miss_clearance", k.grasp.miss_clearance);
    }
    if (j.contains("depth")) {
      check_keys(j.at("depth"), {"max_gap"}, "depth");
      read(j.at("depth"), "max_gap", k.max_gap);
    }
    if (j.contains("collect")) {
      check_keys(j.at("collect"), {"min_success"}, "collect");
      read(j.at("collect"), "min_success", k.min_success);
    }
    if (j.contains("segmentation")) {
      const auto& s = j.at("segmentation");
      check_keys(s, {"workspace_min", "workspace_max", "plane_dist", "plane_min_frac", "plane_iterations", "cluster_tol",
                     "cluster_min", "cluster_max"},
                 "segmentation");
      if (s.contains("workspace_min")) k.segmentation.workspace.min = detail::read_vec3(s.at("workspace_min"), "workspace_min");
      if (s.contains("workspace_max")) k.segmentation.workspace.max = detail::read_vec3(s.at("workspace_max"), "workspace_max");
      read(s, "plane_dist", k.segmentation.plane_dist);
      read(s, "plane_min_frac", k.segmentation.plane_min_frac);
      read(s, "plane_iterations", k.segmentation.plane_iterations);
      read(s, "cluster_tol", k.segmentation.cluster_tol);
      read(s, "cluster_min", k.segmentation.cluster_min);
      read(s, "cluster_max", k.segmentation.cluster_max);
    }
    if (j.contains("registration")) {
      const auto& s = j.at("registration");
      auto& r = k.registration;
      check_keys(s, {"model_leaf", "feature_radius", "coarse_leaf", "coarse_iterations", "pair_iterations", "inlier_dist",
                     "viewpoints", "candidates", "candidate_icp_iterations", "select_dist", "icp_max_iterations",
                     "icp_epsilon", "icp_max_correspondence", "restarts", "restart_rotation_deg", "restart_translation",
                     "acceptance_fitness"},
                 "registration");
      read(s, "model_leaf", k.model_leaf);
      read(s, "feature_radius", r.coarse.feature_radius);
      read(s, "coarse_leaf", r.coarse.leaf);
      read(s, "coarse_iterations", r.coarse.iterations);
      read(s, "pair_iterations", r.coarse.pair_iterations);
      read(s, "inlier_dist", r.coarse.inlier_dist);
      if (s.contains("viewpoints")) {
        r.coarse.viewpoints.clear();
        for (const auto& v : s.at("viewpoints")) r.coarse.viewpoints.push_back(detail::read_vec3(v, "viewpoints"));
      }
      read(s, "candidates", r.candidates);
      read(s, "candidate_icp_iterations", r.candidate_icp_iterations);
      read(s, "select_dist", r.select_dist);
      read(s, "icp_max_iterations", r.icp.max_iterations);
      read(s, "icp_epsilon", r.icp.transform_epsilon);
      read(s, "icp_max_correspondence", r.icp.max_correspondence_dist);
      read(s, "restarts", r.restarts);
      read(s, "restart_rotation_deg", r.restart_rotation_deg);
      read(s, "restart_translation", r.restart_translation);
      read(s, "acceptance_fitness", r.acceptance_fitness);
    }
    if (j.contains("camera")) {
      const auto& s = j.at("camera");
      check_keys(s, {"range", "azimuth_deg", "elevation_deg", "target", "noise_sigma"}, "camera");
      read(s, "range", k.rig.range);
      read(s, "azimuth_deg", k.rig.azimuth_deg);
      read(s, "elevation_deg", k.rig.elevation_deg);
      if (s.contains("target")) k.rig.target = detail::read_vec3(s.at("target"), "camera.target");
      read(s, "noise_sigma", k.rig.noise_sigma);
    }
    if (j.contains("table")) {
      const auto& s = j.at("table");
      check_keys(s, {"size_x", "size_y", "spacing"}, "table");
      read(s, "size_x", c.table.size_x);
      read(s, "size_y", c.table.size_y);
      read(s, "spacing", c.table.spacing);
    }
    if (j.contains("elastomer")) {
      const auto& s = j.at("elastomer");
      check_keys(s, {"smoothing_radius", "background", "light_dirs", "light_colors"}, "elastomer");
      read(s, "smoothing_radius", k.elastomer.smoothing_radius);
      if (s.contains("background")) k.elastomer.background = detail::read_vec3(s.at("background"), "elastomer.background");
      for (const char* key : {"light_dirs", "light_colors"}) {
        if (!s.contains(key)) continue;
        const auto& arr = s.at(key);
        require(arr.is_array() && arr.size() == 3, ErrorCode::InvalidParams, std::string("elastomer.") + key + " needs 3 vectors",
                {std::string("elastomer.") + key});
        auto& dst = std::string(key) == "light_dirs" ? k.elastomer.light_dirs : k.elastomer.light_colors;
        for (std::size_t l = 0; l < 3; ++l) dst[l] = detail::read_vec3(arr[l], std::string("elastomer.") + key);
      }
    }
    if (j.contains("ssim")) {
      const auto& s = j.at("ssim");
      check_keys(s, {"window", "sigma", "k1", "k2", "dynamic_range"}, "ssim");
      read(s, "window", c.eval.ssim.window);
      read(s, "sigma", c.eval.ssim.sigma);
      read(s, "k1", c.eval.ssim.k1);
      read(s, "k2", c.eval.ssim.k2);
      read(s, "dynamic_range", c.eval.ssim.dynamic_range);
    }
    if (j.contains("evaluation")) {
      const auto& s = j.at("evaluation");
      check_keys(s, {"baseline_n", "baseline_pool"}, "evaluation");
      read(s, "baseline_n", c.eval.baseline_n);
      if (s.contains("baseline_pool")) c.eval.pool = baseline_pool_from_string(s.at("baseline_pool").get<std::string>());
    }
    if (j.contains("density")) {
      const auto& s = j.at("density");
      check_keys(s, {"densities", "grasps"}, "density");
      read(s, "densities", c.density.densities);
      read(s, "grasps", c.density.grasps);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidParams, std::string("bad config: ") + e.what());
  }
  sync(c);
  validate(c);
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) { return config_from_json(read_json(path)); }

}  // namespace tactile
