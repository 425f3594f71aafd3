#pragma once

#include <array>

#include "json.hpp"
#include "tactile/contact.hpp"
#include "tactile/image.hpp"

namespace tactile {

/// Membrane and illumination parameters of the analytic sensor model.
/// Light directions are in the image frame (row axis, column axis, out of
/// the membrane); colors are RGB gains per unit of n.L.
struct ElastomerModel {
  double smoothing_radius = 2.0;  // Gaussian sigma, in bins
  std::array<Vec3, 3> light_dirs{};
  std::array<Vec3, 3> light_colors{};
  Vec3 background{110.0, 105.0, 120.0};

  ElastomerModel() {
    const double el = std::numbers::pi / 4;
    for (int l = 0; l < 3; ++l) {
      const double az = std::numbers::pi / 2 + l * 2 * std::numbers::pi / 3;
      light_dirs[static_cast<std::size_t>(l)] = Vec3(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
      light_colors[static_cast<std::size_t>(l)] = Vec3::Zero();
      light_colors[static_cast<std::size_t>(l)][l] = 300.0;
    }
  }

  bool valid() const {
    if (!(smoothing_radius >= 0)) return false;
    for (const auto& d : light_dirs)
      if (std::abs(d.norm() - 1.0) > 1e-9) return false;
    return true;
  }
};

/// Membrane displacement in meters over the depth-map grid.
struct HeightField {
  int m = 0, k = 0;
  double dx = 1.0, dz = 1.0;  // bin pitch along rows / columns, m
  std::vector<double> values;

  double at(int i, int j) const { return values[static_cast<std::size_t>(i) * static_cast<std::size_t>(k) + static_cast<std::size_t>(j)]; }
  double& at(int i, int j) { return values[static_cast<std::size_t>(i) * static_cast<std::size_t>(k) + static_cast<std::size_t>(j)]; }
};

/// Normalized Gaussian taps for sigma (in samples), truncated at 3 sigma.
inline std::vector<double> gaussian_kernel(double sigma) {
  if (sigma <= 0) return {1.0};
  const int half = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> taps(static_cast<std::size_t>(2 * half + 1));
  double sum = 0;
  for (int i = -half; i <= half; ++i) sum += taps[static_cast<std::size_t>(i + half)] = std::exp(-0.5 * i * i / (sigma * sigma));
  for (auto& t : taps) t /= sum;
  return taps;
}

/// Separable convolution with replicated borders.
inline std::vector<double> convolve_separable(const std::vector<double>& in, int rows, int cols,
                                              const std::vector<double>& taps) {
  const int half = static_cast<int>(taps.size() / 2);
  std::vector<double> tmp(in.size()), out(in.size());
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      double s = 0;
      for (int t = -half; t <= half; ++t) {
        const int cc = std::clamp(c + t, 0, cols - 1);
        s += taps[static_cast<std::size_t>(t + half)] * in[static_cast<std::size_t>(r * cols + cc)];
      }
      tmp[static_cast<std::size_t>(r * cols + c)] = s;
    }
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      double s = 0;
      for (int t = -half; t <= half; ++t) {
        const int rr = std::clamp(r + t, 0, rows - 1);
        s += taps[static_cast<std::size_t>(t + half)] * tmp[static_cast<std::size_t>(rr * cols + c)];
      }
      out[static_cast<std::size_t>(r * cols + c)] = s;
    }
  return out;
}

/// h = max(0, -value) per bin, then Gaussian smoothing.
inline HeightField indent(const DepthMap& map, const ElastomerModel& model) {
  require(map.m >= 1 && map.k >= 1 && map.values.size() == static_cast<std::size_t>(map.m) * static_cast<std::size_t>(map.k),
          ErrorCode::InvalidArgument, "malformed depth map");
  require(model.valid(), ErrorCode::InvalidParams, "invalid elastomer model", {"elastomer"});
  HeightField h{map.m, map.k, map.bin_dx(), map.bin_dz(), std::vector<double>(map.values.size())};
  for (std::size_t i = 0; i < h.values.size(); ++i) h.values[i] = std::max(0.0, -static_cast<double>(map.values[i]));
  if (model.smoothing_radius > 0) h.values = convolve_separable(h.values, h.m, h.k, gaussian_kernel(model.smoothing_radius));
  return h;
}

/// Lambertian shading of the membrane relative to the flat state, added to
/// the background color.
inline RgbImage shade(const HeightField& h, const ElastomerModel& model) {
  RgbImage img(h.k, h.m);
  std::array<double, 3> flat{};
  for (std::size_t l = 0; l < 3; ++l) flat[l] = std::max(0.0, model.light_dirs[l].z());
  for (int i = 0; i < h.m; ++i)
    for (int j = 0; j < h.k; ++j) {
      const int i0 = std::max(i - 1, 0), i1 = std::min(i + 1, h.m - 1);
      const int j0 = std::max(j - 1, 0), j1 = std::min(j + 1, h.k - 1);
      const double gx = i1 > i0 ? (h.at(i1, j) - h.at(i0, j)) / ((i1 - i0) * h.dx) : 0.0;
      const double gz = j1 > j0 ? (h.at(i, j1) - h.at(i, j0)) / ((j1 - j0) * h.dz) : 0.0;
      const Vec3 n = Vec3(-gx, -gz, 1.0).normalized();
      Vec3 color = model.background;
      for (std::size_t l = 0; l < 3; ++l)
        color += model.light_colors[l] * (std::max(0.0, n.dot(model.light_dirs[l])) - flat[l]);
      for (int c = 0; c < 3; ++c) img.at(i, j, c) = static_cast<std::uint8_t>(std::lround(std::clamp(color[c], 0.0, 255.0)));
    }
  return img;
}

inline RgbImage render(const DepthMap& map, const ElastomerModel& model) { return shade(indent(map, model), model); }

inline nlohmann::json elastomer_to_json(const ElastomerModel& model) {
  auto vec = [](const Vec3& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); };
  nlohmann::json j;
  j["smoothing_radius"] = model.smoothing_radius;
  j["background"] = vec(model.background);
  j["light_dirs"] = nlohmann::json::array();
  j["light_colors"] = nlohmann::json::array();
  for (std::size_t l = 0; l < 3; ++l) {
    j["light_dirs"].push_back(vec(model.light_dirs[l]));
    j["light_colors"].push_back(vec(model.light_colors[l]));
  }
  return j;
}

}  // namespace tactile
