#include <gtest/gtest.h>

#include <filesystem>

#include "oracles.hpp"
#include "tactile/evaluation.hpp"

using namespace tactile;
namespace fs = std::filesystem;

namespace {

GrayImage random_gray(int w, int h, Rng& rng) {
  GrayImage g(w, h);
  for (auto& v : g.data) v = std::floor(rng.uniform(0, 256));
  return g;
}

RgbImage random_rgb(int w, int h, Rng& rng) {
  RgbImage img(w, h);
  // Smooth field plus noise so images are related but distinct.
  const double fx = rng.uniform(0.1, 0.4), fy = rng.uniform(0.1, 0.4), ph = rng.uniform(0, 6);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      for (int ch = 0; ch < 3; ++ch)
        img.at(r, c, ch) = static_cast<std::uint8_t>(std::clamp(128 + 60 * std::sin(fx * r + fy * c + ph + ch) + rng.uniform(-20, 20), 0.0, 255.0));
  return img;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

// Manifest of n records (all test) with random tactile images on disk.
PairManifest write_fake_dataset(const fs::path& root, std::size_t n, std::uint64_t seed) {
  fs::create_directories(root / "tactile");
  Rng rng(seed);
  PairManifest m;
  m.m = 24;
  m.k = 32;
  for (std::size_t i = 0; i < n; ++i) {
    PairRecord r;
    r.id = "obj0-g" + std::to_string(1000 + i) + "-L";
    r.tactile_path = "tactile/" + r.id + ".png";
    r.depth_path = "depth/" + r.id + ".f32";
    r.split = Split::test;
    write_png(root / r.tactile_path, random_rgb(m.k, m.m, rng));
    m.records.push_back(r);
  }
  return m;
}

}  // namespace

TEST(Ssim, IdentityIsOne) {
  Rng rng(1);
  const auto a = random_gray(40, 30, rng);
  EXPECT_NEAR(ssim(a, a), 1.0, 1e-12);
}

TEST(Ssim, MatchesDoubleLoopOracle) {
  Rng rng(2);
  for (int t = 0; t < 10; ++t) {
    const auto a = random_gray(32, 32, rng);
    auto b = a;
    for (auto& v : b.data) v = std::clamp(v + rng.normal() * 30.0, 0.0, 255.0);
    EXPECT_NEAR(ssim(a, b), oracle::ssim(a, b), 1e-9);
  }
}

TEST(Ssim, SymmetricAndBounded) {
  Rng rng(3);
  const auto a = random_gray(25, 25, rng), b = random_gray(25, 25, rng);
  EXPECT_NEAR(ssim(a, b), ssim(b, a), 1e-15);
  EXPECT_LT(ssim(a, b), 1.0);
  EXPECT_GE(ssim(a, b), -1.0);
}

TEST(Ssim, ErrorsOnBadInput) {
  Rng rng(4);
  try {
    ssim(random_gray(20, 20, rng), random_gray(21, 20, rng));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
  EXPECT_THROW(ssim(random_gray(8, 8, rng), random_gray(8, 8, rng)), Error);
  SsimParams even;
  even.window = 10;
  EXPECT_THROW(ssim(random_gray(20, 20, rng), random_gray(20, 20, rng), even), Error);
}

TEST(Baseline, FullPoolEqualsMeanOverEligible) {
  Rng rng(5);
  const auto est = random_gray(20, 20, rng);
  std::vector<GrayImage> pool;
  for (int i = 0; i < 8; ++i) pool.push_back(random_gray(20, 20, rng));
  double expected = 0;
  for (int i = 0; i < 8; ++i)
    if (i != 3) expected += oracle::ssim(est, pool[static_cast<std::size_t>(i)]);
  expected /= 7;
  EXPECT_NEAR(baseline_ssim(est, pool, 7, 11, 3), expected, 1e-9);
}

TEST(Baseline, SubsetIsADistinctDraw) {
  Rng rng(6);
  const auto est = random_gray(20, 20, rng);
  std::vector<GrayImage> pool;
  std::vector<double> each;
  for (int i = 0; i < 10; ++i) {
    pool.push_back(random_gray(20, 20, rng));
    each.push_back(oracle::ssim(est, pool.back()));
  }
  // Brute force over every 3-subset: the result must equal one subset mean.
  const double got = baseline_ssim(est, pool, 3, 12);
  double closest = 1e9;
  for (int i = 0; i < 10; ++i)
    for (int j = i + 1; j < 10; ++j)
      for (int k = j + 1; k < 10; ++k)
        closest = std::min(closest, std::abs(got - (each[i] + each[j] + each[k]) / 3));
  EXPECT_LT(closest, 1e-9);
  EXPECT_EQ(got, baseline_ssim(est, pool, 3, 12));
}

TEST(Baseline, ExcludedImageNeverDrawn) {
  Rng rng(7);
  const auto est = random_gray(20, 20, rng);
  std::vector<GrayImage> pool{est, random_gray(20, 20, rng), random_gray(20, 20, rng)};
  for (std::uint64_t s = 0; s < 20; ++s) EXPECT_LT(baseline_ssim(est, pool, 2, s, 0), 0.5);
}

TEST(Baseline, PoolTooSmall) {
  Rng rng(8);
  std::vector<GrayImage> pool{random_gray(20, 20, rng), random_gray(20, 20, rng)};
  try {
    baseline_ssim(pool[0], pool, 2, 1, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::PoolTooSmall);
  }
}

TEST(Template, PlantedTemplateScoresOne) {
  Rng rng(9);
  auto image = random_gray(50, 40, rng);
  const auto templ = random_gray(9, 7, rng);
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j < 9; ++j) image.at(13 + i, 21 + j) = templ.at(i, j);
  const auto m = match_template(image, templ);
  EXPECT_EQ(m.row, 13);
  EXPECT_EQ(m.col, 21);
  EXPECT_NEAR(m.score, 1.0, 1e-9);
}

TEST(Template, InvertedTemplateScoresMinusOne) {
  Rng rng(10);
  auto image = random_gray(30, 30, rng);
  const auto templ = random_gray(6, 6, rng);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) image.at(4 + i, 5 + j) = 255.0 - templ.at(i, j);
  const auto map = correlation_map(image, templ);
  EXPECT_NEAR(map.at(4, 5), -1.0, 1e-9);
  EXPECT_NEAR(*std::min_element(map.data.begin(), map.data.end()), -1.0, 1e-9);
}

TEST(Template, InvariantToGainAndOffset) {
  Rng rng(11);
  const auto image = random_gray(30, 25, rng);
  const auto templ = random_gray(5, 8, rng);
  auto shifted = templ;
  for (auto& v : shifted.data) v = 3.0 * v + 40.0;
  const auto a = correlation_map(image, templ), b = correlation_map(image, shifted);
  for (std::size_t i = 0; i < a.data.size(); ++i) EXPECT_NEAR(a.data[i], b.data[i], 1e-12);
}

TEST(Template, LocationInvariantToImageOffset) {
  Rng rng(14);
  auto image = random_gray(40, 40, rng);
  GrayImage templ(8, 6);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 8; ++j) templ.at(i, j) = image.at(20 + i, 9 + j);
  auto brighter = image;
  for (auto& v : brighter.data) v += 55.0;
  const auto a = match_template(image, templ), b = match_template(brighter, templ);
  EXPECT_EQ(a.row, b.row);
  EXPECT_EQ(a.col, b.col);
  EXPECT_EQ(b.row, 20);
  EXPECT_EQ(b.col, 9);
}

TEST(Template, MatchesDoubleLoopOracle) {
  Rng rng(12);
  const auto image = random_gray(40, 33, rng);
  const auto templ = random_gray(7, 5, rng);
  const auto got = correlation_map(image, templ), expected = oracle::zncc(image, templ);
  ASSERT_EQ(got.width, expected.width);
  ASSERT_EQ(got.height, expected.height);
  for (std::size_t i = 0; i < got.data.size(); ++i) EXPECT_NEAR(got.data[i], expected.data[i], 1e-9);
}

TEST(Template, FlatWindowScoresZeroAndErrors) {
  Rng rng(13);
  GrayImage image(20, 20, 77.0);
  const auto templ = random_gray(4, 4, rng);
  for (double v : correlation_map(image, templ).data) EXPECT_EQ(v, 0.0);
  try {
    correlation_map(image, GrayImage(3, 3, 5.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ZeroVariance);
  }
  try {
    correlation_map(templ, image);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TemplateTooLarge);
  }
}

TEST(Summary, SampleStandardError) {
  const std::vector<double> v{1, 2, 3, 4};
  const auto s = summarize(v);
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_NEAR(s.stderr_, std::sqrt(5.0 / 3.0) / 2.0, 1e-15);
  EXPECT_EQ(summarize(std::vector<double>{7}).stderr_, 0.0);
}

TEST(Evaluate, CopiesScoreOne) {
  TempDir dir("tactile_eval_copies");
  const auto m = write_fake_dataset(dir.path, 20, 1);
  fs::create_directories(dir.path / "est");
  for (const auto& r : m.records) fs::copy_file(dir.path / r.tactile_path, dir.path / "est" / (r.id + ".png"));
  const auto report = evaluate(m, dir.path, dir.path / "est", 3);
  EXPECT_EQ(report.n, 20u);
  EXPECT_NEAR(report.mean, 1.0, 1e-12);
  EXPECT_NEAR(report.stderr_, 0.0, 1e-12);
  EXPECT_LT(report.baseline_mean, 0.9);
}

TEST(Evaluate, ReportStatisticsRecomputeFromPairs) {
  TempDir dir("tactile_eval_stats");
  const auto m = write_fake_dataset(dir.path, 18, 2);
  fs::create_directories(dir.path / "est");
  Rng rng(3);
  for (const auto& r : m.records) write_png(dir.path / "est" / (r.id + ".png"), random_rgb(m.k, m.m, rng));
  const auto report = evaluate(m, dir.path, dir.path / "est", 4);

  std::vector<GrayImage> truth;
  for (const auto& r : m.records) truth.push_back(luma(read_png(dir.path / r.tactile_path)));
  double sum = 0, bsum = 0;
  for (std::size_t i = 0; i < m.records.size(); ++i) {
    const auto est = luma(read_png(dir.path / "est" / (m.records[i].id + ".png")));
    const double s = oracle::ssim(est, truth[i]);
    EXPECT_NEAR(report.scores[i], s, 1e-9);
    sum += s;
    bsum += report.baseline_scores[i];
  }
  const double n = static_cast<double>(m.records.size());
  EXPECT_NEAR(report.mean, sum / n, 1e-12);
  EXPECT_NEAR(report.baseline_mean, bsum / n, 1e-12);
  double ss = 0;
  for (double s : report.scores) ss += (s - report.mean) * (s - report.mean);
  EXPECT_NEAR(report.stderr_, std::sqrt(ss / (n - 1)) / std::sqrt(n), 1e-12);

  const auto j = report_to_json(report);
  EXPECT_EQ(j.at("pairs").size(), m.records.size());
  EXPECT_EQ(j.at("baseline_n"), 15);
}

TEST(Evaluate, MissingEstimatesAreListed) {
  TempDir dir("tactile_eval_missing");
  const auto m = write_fake_dataset(dir.path, 5, 3);
  fs::create_directories(dir.path / "est");
  fs::copy_file(dir.path / m.records[0].tactile_path, dir.path / "est" / (m.records[0].id + ".png"));
  try {
    evaluate(m, dir.path, dir.path / "est", 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingEstimate);
    ASSERT_EQ(e.subjects().size(), 4u);
    EXPECT_EQ(e.subjects()[0], m.records[1].id);
  }
}

TEST(Evaluate, IndependentOfRecordOrder) {
  TempDir dir("tactile_eval_order");
  auto m = write_fake_dataset(dir.path, 17, 4);
  fs::create_directories(dir.path / "est");
  Rng rng(5);
  for (const auto& r : m.records) write_png(dir.path / "est" / (r.id + ".png"), random_rgb(m.k, m.m, rng));
  const auto a = evaluate(m, dir.path, dir.path / "est", 9);
  std::reverse(m.records.begin(), m.records.end());
  const auto b = evaluate(m, dir.path, dir.path / "est", 9);
  for (std::size_t i = 0; i < a.n; ++i) EXPECT_EQ(a.baseline_scores[i], b.baseline_scores[a.n - 1 - i]);
  EXPECT_NEAR(a.mean, b.mean, 1e-15);
  EXPECT_NEAR(a.stderr_, b.stderr_, 1e-15);
  EXPECT_NEAR(a.baseline_mean, b.baseline_mean, 1e-15);
}

TEST(Chart, BarChartHasRequestedSize) {
  const std::vector<Bar> bars{{0.5, 0.1, {200, 0, 0}}, {0.9, 0.02, {0, 0, 200}}};
  const auto img = bar_chart(bars, 200, 150);
  EXPECT_EQ(img.width, 200);
  EXPECT_EQ(img.height, 150);
}

TEST(DensityStudy, NativeDensityScoresOne) {
  const std::vector<SyntheticObject> objects{make_object(ObjectKind::embossed_plate, 1)};
  DensityStudyConfig cfg;
  cfg.grasps = 3;
  cfg.densities = {density_per_cm3(objects[0].cloud)};
  const auto rows = density_study(objects, cfg, 2);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_NEAR(rows[0].ssim.mean, 1.0, 1e-12);
  EXPECT_EQ(rows[0].ssim.n, 6u);
}

TEST(DensityStudy, TableHasOneRowPerDensity) {
  const std::vector<SyntheticObject> objects{make_object(ObjectKind::ridged_box, 1)};
  DensityStudyConfig cfg;
  cfg.grasps = 2;
  const auto rows = density_study(objects, cfg, 3);
  ASSERT_EQ(rows.size(), 5u);
  const auto csv = density_csv(rows);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 6);
  EXPECT_EQ(csv.rfind("density_pts_per_cm3,ssim_mean,ssim_stderr", 0), 0u);
  for (const auto& r : rows) EXPECT_NEAR(r.achieved, r.density, 0.15 * r.density);
}

TEST(DensityStudy, RejectsDensityAboveNative) {
  const std::vector<SyntheticObject> objects{make_object(ObjectKind::ridged_box, 1)};
  DensityStudyConfig cfg;
  cfg.densities = {1e6};
  EXPECT_THROW(density_study(objects, cfg, 1), Error);
}
