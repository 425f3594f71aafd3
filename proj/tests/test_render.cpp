#include <gtest/gtest.h>

#include "tactile/tactile_render.hpp"

using namespace tactile;

namespace {

DepthMap ramp_map(int m, int k, double slope) {
  DepthMap map = blank_depth_map(SensorGeometry{}, m, k);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < k; ++j) map.at(i, j) = static_cast<float>(-0.0002 - slope * i * map.bin_dx());
  return map;
}

DepthMap dimple_map(int m, int k) {
  DepthMap map = blank_depth_map(SensorGeometry{}, m, k);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < k; ++j) {
      const double r2 = std::pow(i - (m - 1) / 2.0, 2) + std::pow(j - (k - 1) / 2.0, 2);
      map.at(i, j) = static_cast<float>(0.001 - 0.0015 * std::exp(-r2 / 60.0));
    }
  return map;
}

}  // namespace

TEST(Render, SmoothingMatchesDirect2dConvolution) {
  const auto map = dimple_map(30, 22);
  ElastomerModel model;
  model.smoothing_radius = 1.7;
  const auto h = indent(map, model);

  const double s = model.smoothing_radius;
  const int half = static_cast<int>(std::ceil(3 * s));
  double wsum = 0;
  for (int a = -half; a <= half; ++a)
    for (int b = -half; b <= half; ++b) wsum += std::exp(-(a * a + b * b) / (2 * s * s));
  for (int i = 0; i < map.m; ++i)
    for (int j = 0; j < map.k; ++j) {
      double acc = 0;
      for (int a = -half; a <= half; ++a)
        for (int b = -half; b <= half; ++b) {
          const int ii = std::clamp(i + a, 0, map.m - 1), jj = std::clamp(j + b, 0, map.k - 1);
          acc += std::exp(-(a * a + b * b) / (2 * s * s)) * std::max(0.0, -static_cast<double>(map.at(ii, jj)));
        }
      EXPECT_NEAR(h.at(i, j), acc / wsum, 1e-15) << i << "," << j;
    }
}

TEST(Render, NoContactGivesBackground) {
  const ElastomerModel model;
  const auto img = render(blank_depth_map(SensorGeometry{}, 12, 9), model);
  ASSERT_EQ(img.width, 9);
  ASSERT_EQ(img.height, 12);
  for (int i = 0; i < img.height; ++i)
    for (int j = 0; j < img.width; ++j)
      for (int c = 0; c < 3; ++c) EXPECT_EQ(img.at(i, j, c), std::lround(model.background[c]));
}

TEST(Render, HeightFieldKeepsMirrorSymmetry) {
  const auto map = dimple_map(41, 41);
  const auto h = indent(map, ElastomerModel{});
  for (int i = 0; i < 41; ++i)
    for (int j = 0; j < 41; ++j) {
      EXPECT_NEAR(h.at(i, j), h.at(40 - i, j), 1e-15);
      EXPECT_NEAR(h.at(i, j), h.at(i, 40 - j), 1e-15);
    }
}

TEST(Render, RampShadesToLambertianColor) {
  const double slope = 0.15;
  const auto map = ramp_map(40, 30, slope);
  const ElastomerModel model;
  const auto img = render(map, model);
  // Height rises along rows with gradient `slope`; interior normal is (-slope, 0, 1).
  const Vec3 n = Vec3(-slope, 0, 1).normalized();
  for (int c = 0; c < 3; ++c) {
    double v = model.background[c];
    for (std::size_t l = 0; l < 3; ++l)
      v += model.light_colors[l][c] * (std::max(0.0, n.dot(model.light_dirs[l])) - std::max(0.0, model.light_dirs[l].z()));
    const auto expected = std::lround(std::clamp(v, 0.0, 255.0));
    for (int i = 8; i < 32; ++i)
      for (int j = 0; j < 30; ++j) EXPECT_EQ(img.at(i, j, c), expected) << i << "," << j << "," << c;
  }
}

TEST(Render, NonContactValuesDoNotMatter) {
  auto a = dimple_map(25, 25);
  auto b = a;
  Rng rng(1);
  for (auto& v : b.values)
    if (v > 0) v = static_cast<float>(rng.uniform(0.0, 0.004));
  const ElastomerModel model;
  EXPECT_EQ(render(a, model).data, render(b, model).data);
}

TEST(Render, ContactChangesImage) {
  const ElastomerModel model;
  const auto blank = render(blank_depth_map(SensorGeometry{}, 25, 25), model);
  EXPECT_NE(render(dimple_map(25, 25), model).data, blank.data);
}

TEST(Render, InvalidModelThrows) {
  ElastomerModel model;
  model.smoothing_radius = -1;
  EXPECT_THROW(render(dimple_map(5, 5), model), Error);
}

TEST(Render, PngRoundTrip) {
  const auto img = render(dimple_map(20, 16), ElastomerModel{});
  const auto path = std::filesystem::temp_directory_path() / "tactile_render_test.png";
  write_png(path, img);
  const auto back = read_png(path);
  EXPECT_EQ(back.width, img.width);
  EXPECT_EQ(back.height, img.height);
  EXPECT_EQ(back.data, img.data);
  std::filesystem::remove(path);
}
