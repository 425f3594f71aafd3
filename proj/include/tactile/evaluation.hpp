#pragma once

#include <sstream>

#include "tactile/dataset.hpp"
#include "tactile/metrics.hpp"

namespace tactile {

enum class BaselinePool { test, all };

inline const char* to_string(BaselinePool p) { return p == BaselinePool::test ? "test" : "all"; }

inline BaselinePool baseline_pool_from_string(const std::string& s) {
  if (s == "test") return BaselinePool::test;
  if (s == "all") return BaselinePool::all;
  throw Error(ErrorCode::InvalidParams, "baseline pool must be 'test' or 'all', got '" + s + "'", {"baseline_pool"});
}

struct EvalOptions {
  SsimParams ssim;
  std::size_t baseline_n = 15;
  BaselinePool pool = BaselinePool::test;
  unsigned jobs = 1;
};

/// Scores `<estimates_dir>/<id>.png` against each test record's tactile
/// image, plus the random-image baseline per record. The baseline draw for a
/// record is seeded from (seed, record id), so results do not depend on
/// record order.
inline EvalReport evaluate(const PairManifest& manifest, const std::filesystem::path& root,
                           const std::filesystem::path& estimates_dir, std::uint64_t seed, const EvalOptions& opt = {}) {
  const auto tests = manifest.in_split(Split::test);
  require(!tests.empty(), ErrorCode::InvalidArgument, "manifest has no test records");
  std::vector<std::string> missing;
  for (const PairRecord* r : tests)
    if (!std::filesystem::exists(estimates_dir / (r->id + ".png"))) missing.push_back(r->id);
  require(missing.empty(), ErrorCode::MissingEstimate,
          std::to_string(missing.size()) + " test record(s) have no estimate in " + estimates_dir.string(), missing);

  std::vector<const PairRecord*> pool_records;
  for (const auto& r : manifest.records)
    if (opt.pool == BaselinePool::all || r.split == Split::test) pool_records.push_back(&r);
  std::sort(pool_records.begin(), pool_records.end(), [](const PairRecord* a, const PairRecord* b) { return a->id < b->id; });
  std::vector<GrayImage> pool(pool_records.size());
  parallel_for(pool.size(), opt.jobs, [&](std::size_t i) { pool[i] = luma(read_png(root / pool_records[i]->tactile_path)); });

  std::vector<double> scores(tests.size()), baseline(tests.size());
  parallel_for(tests.size(), opt.jobs, [&](std::size_t i) {
    const PairRecord* r = tests[i];
    const GrayImage estimate = luma(read_png(estimates_dir / (r->id + ".png")));
    std::optional<std::size_t> own;
    for (std::size_t p = 0; p < pool_records.size(); ++p)
      if (pool_records[p] == r) own = p;
    const GrayImage truth = own ? pool[*own] : luma(read_png(root / r->tactile_path));
    scores[i] = ssim(estimate, truth, opt.ssim);
    baseline[i] = baseline_ssim(estimate, pool, opt.baseline_n, split_key(seed, r->id), own, opt.ssim);
  });

  std::vector<std::string> ids;
  for (const PairRecord* r : tests) ids.push_back(r->id);
  EvalReport report = make_report(std::move(ids), std::move(scores), std::move(baseline));
  report.baseline_n = opt.baseline_n;
  report.baseline_pool = to_string(opt.pool);
  return report;
}

// ---------------------------------------------------------------------------
// Density study
// ---------------------------------------------------------------------------

struct DensityStudyConfig {
  std::vector<double> densities{1.0, 10.0, 20.0, 40.0, 80.0};  // points/cm^3
  std::size_t grasps = 20;                                       // per object
  SensorGeometry sensor;
  GraspParams grasp;
  ElastomerModel elastomer;
  SsimParams ssim;
  int m = 100, k = 100;
  double max_gap = 0.001;  // m; raised to the voxel leaf for downsampled clouds
  unsigned jobs = 1;
};

struct DensityRow {
  double density = 0.0;   // requested, points/cm^3
  double achieved = 0.0;  // points/cm^3, averaged over objects
  double leaf = 0.0;      // m, averaged over objects
  Summary ssim;
  std::size_t empty_contacts = 0;
};

/// For each density, voxel-downsamples every object, regenerates the depth
/// maps of a fixed grasp set and scores their renders against renders from
/// the full-resolution clouds. A contact volume left empty by downsampling
/// is rendered as a blank map.
inline std::vector<DensityRow> density_study(std::span<const SyntheticObject> objects, const DensityStudyConfig& cfg,
                                             std::uint64_t seed) {
  require(!objects.empty(), ErrorCode::InvalidArgument, "density study needs at least one object");
  require(!cfg.densities.empty(), ErrorCode::InvalidParams, "no densities given", {"densities"});
  require(cfg.grasps >= 1, ErrorCode::InvalidParams, "density study needs at least one grasp", {"grasps"});
  std::vector<double> native(objects.size());
  for (std::size_t o = 0; o < objects.size(); ++o) {
    native[o] = density_per_cm3(objects[o].cloud);
    for (double d : cfg.densities)
      require(d > 0 && d <= native[o], ErrorCode::InvalidParams,
              "density " + std::to_string(d) + " is outside (0, native " + std::to_string(native[o]) + "]", {"densities"});
  }

  struct Job {
    std::size_t object;
    GraspSample grasp;
    Finger finger;
  };
  std::vector<Job> jobs;
  for (std::size_t o = 0; o < objects.size(); ++o)
    for (std::size_t g = 0; g < cfg.grasps; ++g) {
      const GraspSample gs = sample_grasp(objects[o].cloud, cfg.sensor, cfg.grasp, derive_seed(seed, o * 100003 + g));
      jobs.push_back({o, gs, Finger::left});
      jobs.push_back({o, gs, Finger::right});
    }

  auto render_all = [&](std::span<const PointCloud* const> clouds, std::span<const double> gaps, std::size_t& empty) {
    std::vector<GrayImage> out(jobs.size());
    std::vector<char> blank(jobs.size(), 0);
    parallel_for(jobs.size(), cfg.jobs, [&](std::size_t i) {
      const Job& j = jobs[i];
      DepthMap map;
      try {
        const PointCloud patch = extract_contact_volume(*clouds[j.object], j.grasp, j.finger, cfg.sensor);
        map = generate_depth(patch, cfg.sensor, cfg.m, cfg.k, gaps[j.object]);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::EmptyContact) throw;
        map = blank_depth_map(cfg.sensor, cfg.m, cfg.k);
        blank[i] = 1;
      }
      out[i] = luma(render(map, cfg.elastomer));
    });
    empty = static_cast<std::size_t>(std::count(blank.begin(), blank.end(), 1));
    return out;
  };

  std::vector<const PointCloud*> full(objects.size());
  for (std::size_t o = 0; o < objects.size(); ++o) full[o] = &objects[o].cloud;
  const std::vector<double> base_gaps(objects.size(), cfg.max_gap);
  std::size_t ignored = 0;
  const auto reference = render_all(full, base_gaps, ignored);

  std::vector<DensityRow> rows;
  for (double d : cfg.densities) {
    DensityRow row;
    row.density = d;
    std::vector<PointCloud> reduced(objects.size());
    std::vector<const PointCloud*> ptrs(objects.size());
    std::vector<double> gaps(objects.size());
    for (std::size_t o = 0; o < objects.size(); ++o) {
      DensityResult r = downsample_to_density(objects[o].cloud, d);
      row.achieved += r.achieved / static_cast<double>(objects.size());
      row.leaf += r.leaf / static_cast<double>(objects.size());
      gaps[o] = std::max(cfg.max_gap, r.leaf);
      reduced[o] = std::move(r.cloud);
      ptrs[o] = &reduced[o];
    }
    const auto images = render_all(ptrs, gaps, row.empty_contacts);
    std::vector<double> scores(images.size());
    for (std::size_t i = 0; i < images.size(); ++i) scores[i] = ssim(images[i], reference[i], cfg.ssim);
    row.ssim = summarize(scores);
    rows.push_back(row);
  }
  return rows;
}

inline std::string density_csv(std::span<const DensityRow> rows) {
  std::ostringstream out;
  out << "density_pts_per_cm3,ssim_mean,ssim_stderr,achieved_pts_per_cm3,voxel_leaf_m,n,empty_contacts\n";
  out.precision(6);
  for (const auto& r : rows)
    out << r.density << ',' << r.ssim.mean << ',' << r.ssim.stderr_ << ',' << r.achieved << ',' << r.leaf << ','
        << r.ssim.n << ',' << r.empty_contacts << '\n';
  return out.str();
}

inline RgbImage density_chart(std::span<const DensityRow> rows) {
  std::vector<Bar> bars;
  for (const auto& r : rows) bars.push_back({r.ssim.mean, r.ssim.stderr_, {70, 110, 180}});
  return bar_chart(bars, 80 * static_cast<int>(std::max<std::size_t>(rows.size(), 2)) + 40, 280);
}

}  // namespace tactile
