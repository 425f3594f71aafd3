#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tactile/image.hpp"
#include "tactile/tactile_render.hpp"

namespace tactile {

// ---------------------------------------------------------------------------
// SSIM
// ---------------------------------------------------------------------------

struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 255.0;

  bool valid() const { return window >= 1 && window % 2 == 1 && sigma > 0 && k1 > 0 && k2 > 0 && dynamic_range > 0; }
};

/// Normalized 1-D Gaussian taps of the SSIM window; the 2-D window is their
/// outer product.
inline std::vector<double> ssim_taps(const SsimParams& p) {
  std::vector<double> taps(static_cast<std::size_t>(p.window));
  const int half = p.window / 2;
  double sum = 0;
  for (int i = -half; i <= half; ++i) sum += taps[static_cast<std::size_t>(i + half)] = std::exp(-0.5 * i * i / (p.sigma * p.sigma));
  for (auto& t : taps) t /= sum;
  return taps;
}

namespace detail {

/// "Valid" separable correlation: output is (h - w + 1) x (w_img - w + 1).
inline std::vector<double> filter_valid(const std::vector<double>& in, int width, int height, const std::vector<double>& taps) {
  const int w = static_cast<int>(taps.size());
  const int ow = width - w + 1, oh = height - w + 1;
  std::vector<double> tmp(static_cast<std::size_t>(height * ow)), out(static_cast<std::size_t>(oh * ow));
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < ow; ++c) {
      double s = 0;
      for (int t = 0; t < w; ++t) s += taps[static_cast<std::size_t>(t)] * in[static_cast<std::size_t>(r * width + c + t)];
      tmp[static_cast<std::size_t>(r * ow + c)] = s;
    }
  for (int r = 0; r < oh; ++r)
    for (int c = 0; c < ow; ++c) {
      double s = 0;
      for (int t = 0; t < w; ++t) s += taps[static_cast<std::size_t>(t)] * tmp[static_cast<std::size_t>((r + t) * ow + c)];
      out[static_cast<std::size_t>(r * ow + c)] = s;
    }
  return out;
}

}  // namespace detail

/// SSIM map over every full window position (no padding).
inline GrayImage ssim_map(const GrayImage& a, const GrayImage& b, const SsimParams& p = {}) {
  require(p.valid(), ErrorCode::InvalidParams, "invalid SSIM parameters", {"ssim"});
  require(a.width == b.width && a.height == b.height, ErrorCode::DimensionMismatch,
          "SSIM inputs differ in size: " + std::to_string(a.width) + "x" + std::to_string(a.height) + " vs " +
              std::to_string(b.width) + "x" + std::to_string(b.height));
  require(a.width >= p.window && a.height >= p.window, ErrorCode::DimensionMismatch,
          "SSIM inputs are smaller than the window");
  const auto taps = ssim_taps(p);
  const std::size_t n = a.data.size();
  std::vector<double> aa(n), bb(n), ab(n);
  for (std::size_t i = 0; i < n; ++i) {
    aa[i] = a.data[i] * a.data[i];
    bb[i] = b.data[i] * b.data[i];
    ab[i] = a.data[i] * b.data[i];
  }
  const auto mu_a = detail::filter_valid(a.data, a.width, a.height, taps);
  const auto mu_b = detail::filter_valid(b.data, a.width, a.height, taps);
  const auto e_aa = detail::filter_valid(aa, a.width, a.height, taps);
  const auto e_bb = detail::filter_valid(bb, a.width, a.height, taps);
  const auto e_ab = detail::filter_valid(ab, a.width, a.height, taps);
  const double c1 = std::pow(p.k1 * p.dynamic_range, 2), c2 = std::pow(p.k2 * p.dynamic_range, 2);
  GrayImage out(a.width - p.window + 1, a.height - p.window + 1);
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    const double va = e_aa[i] - mu_a[i] * mu_a[i];
    const double vb = e_bb[i] - mu_b[i] * mu_b[i];
    const double cov = e_ab[i] - mu_a[i] * mu_b[i];
    out.data[i] = ((2 * mu_a[i] * mu_b[i] + c1) * (2 * cov + c2)) /
                  ((mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (va + vb + c2));
  }
  return out;
}

/// Mean SSIM. Unclamped, so the range is [-1, 1].
inline double ssim(const GrayImage& a, const GrayImage& b, const SsimParams& p = {}) {
  const GrayImage map = ssim_map(a, b, p);
  double sum = 0;
  for (double v : map.data) sum += v;
  return sum / static_cast<double>(map.data.size());
}

inline double ssim(const RgbImage& a, const RgbImage& b, const SsimParams& p = {}) { return ssim(luma(a), luma(b), p); }

// ---------------------------------------------------------------------------
// Random-image baseline
// ---------------------------------------------------------------------------

/// Mean SSIM of `estimate` against `n` distinct pool images drawn without
/// replacement; `exclude` (the estimate's own ground truth) is never drawn.
inline double baseline_ssim(const GrayImage& estimate, std::span<const GrayImage> pool, std::size_t n, std::uint64_t seed,
                            std::optional<std::size_t> exclude = std::nullopt, const SsimParams& p = {}) {
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < pool.size(); ++i)
    if (!exclude || *exclude != i) eligible.push_back(i);
  require(n >= 1, ErrorCode::InvalidArgument, "baseline needs n >= 1");
  require(eligible.size() >= n, ErrorCode::PoolTooSmall,
          "baseline pool has " + std::to_string(eligible.size()) + " eligible images, needs " + std::to_string(n));
  Rng rng(seed);
  double sum = 0;
  for (std::size_t k : rng.sample_without_replacement(eligible.size(), n)) sum += ssim(estimate, pool[eligible[k]], p);
  return sum / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// Template matching
// ---------------------------------------------------------------------------

struct TemplateMatch {
  int row = 0, col = 0;  // top-left corner
  double score = 0.0;
};

/// Zero-mean normalized cross-correlation of `templ` against every window of
/// `image`, (H - h + 1) x (W - w + 1). Windows with zero variance score 0.
inline GrayImage correlation_map(const GrayImage& image, const GrayImage& templ) {
  require(templ.width >= 1 && templ.height >= 1, ErrorCode::InvalidArgument, "empty template");
  require(templ.width <= image.width && templ.height <= image.height, ErrorCode::TemplateTooLarge,
          "template " + std::to_string(templ.width) + "x" + std::to_string(templ.height) + " exceeds image " +
              std::to_string(image.width) + "x" + std::to_string(image.height));
  const auto [lo, hi] = std::minmax_element(templ.data.begin(), templ.data.end());
  require(*lo != *hi, ErrorCode::ZeroVariance, "template is constant");

  const int th = templ.height, tw = templ.width;
  const double count = static_cast<double>(th * tw);
  double tmean = 0;
  for (double v : templ.data) tmean += v;
  tmean /= count;
  std::vector<double> tz(templ.data.size());
  double tnorm2 = 0;
  for (std::size_t i = 0; i < tz.size(); ++i) {
    tz[i] = templ.data[i] - tmean;
    tnorm2 += tz[i] * tz[i];
  }

  // Integral images of I and I^2 for the per-window mean and variance.
  const int W = image.width, H = image.height;
  std::vector<double> s1(static_cast<std::size_t>((W + 1) * (H + 1)), 0.0), s2(s1.size(), 0.0);
  auto at = [W](int r, int c) { return static_cast<std::size_t>(r * (W + 1) + c); };
  for (int r = 0; r < H; ++r)
    for (int c = 0; c < W; ++c) {
      const double v = image.at(r, c);
      s1[at(r + 1, c + 1)] = v + s1[at(r, c + 1)] + s1[at(r + 1, c)] - s1[at(r, c)];
      s2[at(r + 1, c + 1)] = v * v + s2[at(r, c + 1)] + s2[at(r + 1, c)] - s2[at(r, c)];
    }

  GrayImage out(W - tw + 1, H - th + 1);
  for (int r = 0; r < out.height; ++r)
    for (int c = 0; c < out.width; ++c) {
      const double sum = s1[at(r + th, c + tw)] - s1[at(r, c + tw)] - s1[at(r + th, c)] + s1[at(r, c)];
      const double sq = s2[at(r + th, c + tw)] - s2[at(r, c + tw)] - s2[at(r + th, c)] + s2[at(r, c)];
      const double var = sq - sum * sum / count;
      if (var <= 1e-9 * (sq + 1.0)) {
        out.at(r, c) = 0.0;
        continue;
      }
      double num = 0;
      for (int i = 0; i < th; ++i) {
        const double* row = &image.data[static_cast<std::size_t>((r + i) * W + c)];
        const double* trow = &tz[static_cast<std::size_t>(i * tw)];
        for (int j = 0; j < tw; ++j) num += row[j] * trow[j];
      }
      out.at(r, c) = num / std::sqrt(var * tnorm2);
    }
  return out;
}

/// Location and value of the correlation maximum; the first maximum in
/// row-major order wins ties.
inline TemplateMatch match_template(const GrayImage& image, const GrayImage& templ) {
  const GrayImage map = correlation_map(image, templ);
  TemplateMatch best{0, 0, -std::numeric_limits<double>::infinity()};
  for (int r = 0; r < map.height; ++r)
    for (int c = 0; c < map.width; ++c)
      if (map.at(r, c) > best.score) best = {r, c, map.at(r, c)};
  return best;
}

inline TemplateMatch match_template(const RgbImage& image, const RgbImage& templ) {
  return match_template(luma(image), luma(templ));
}

// ---------------------------------------------------------------------------
// Summary statistics and reports
// ---------------------------------------------------------------------------

struct Summary {
  double mean = 0.0;
  double stderr_ = 0.0;  // sample standard deviation / sqrt(n)
  std::size_t n = 0;
};

inline Summary summarize(std::span<const double> values) {
  Summary s;
  s.n = values.size();
  if (s.n == 0) return s;
  double sum = 0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stderr_ = std::sqrt(ss / static_cast<double>(s.n - 1)) / std::sqrt(static_cast<double>(s.n));
  }
  return s;
}

struct EvalReport {
  std::vector<std::string> ids;
  std::vector<double> scores;           // SSIM(estimate, ground truth) per pair
  std::vector<double> baseline_scores;  // baseline_ssim per pair
  double mean = 0.0, stderr_ = 0.0;
  double baseline_mean = 0.0, baseline_stderr = 0.0;
  std::size_t n = 0;
  std::size_t baseline_n = 15;
  std::string baseline_pool;
};

inline EvalReport make_report(std::vector<std::string> ids, std::vector<double> scores, std::vector<double> baseline) {
  require(!scores.empty(), ErrorCode::InvalidArgument, "evaluation needs at least one pair");
  EvalReport r;
  const Summary s = summarize(scores), b = summarize(baseline);
  r.ids = std::move(ids);
  r.scores = std::move(scores);
  r.baseline_scores = std::move(baseline);
  r.mean = s.mean;
  r.stderr_ = s.stderr_;
  r.baseline_mean = b.mean;
  r.baseline_stderr = b.stderr_;
  r.n = s.n;
  return r;
}

inline nlohmann::json report_to_json(const EvalReport& r) {
  nlohmann::json pairs = nlohmann::json::array();
  for (std::size_t i = 0; i < r.n; ++i)
    pairs.push_back({{"id", r.ids[i]}, {"ssim", r.scores[i]}, {"baseline_ssim", r.baseline_scores[i]}});
  return {{"n", r.n},
          {"mean", r.mean},
          {"stderr", r.stderr_},
          {"baseline_mean", r.baseline_mean},
          {"baseline_stderr", r.baseline_stderr},
          {"baseline_n", r.baseline_n},
          {"baseline_pool", r.baseline_pool},
          {"pairs", pairs}};
}

namespace detail {

inline void fill_rect(RgbImage& img, int r0, int c0, int r1, int c1, std::array<std::uint8_t, 3> color) {
  r0 = std::clamp(r0, 0, img.height);
  r1 = std::clamp(r1, 0, img.height);
  c0 = std::clamp(c0, 0, img.width);
  c1 = std::clamp(c1, 0, img.width);
  for (int r = r0; r < r1; ++r)
    for (int c = c0; c < c1; ++c)
      for (int ch = 0; ch < 3; ++ch) img.at(r, c, ch) = color[static_cast<std::size_t>(ch)];
}

}  // namespace detail

struct Bar {
  double value = 0.0;
  double error = 0.0;
  std::array<std::uint8_t, 3> color{70, 110, 180};
};

/// Bar chart over a [0, 1] value axis with +/- error whiskers and horizontal
/// grid lines every 0.1.
inline RgbImage bar_chart(std::span<const Bar> bars, int width = 360, int height = 280) {
  RgbImage img(width, height, {255, 255, 255});
  const int left = 30, right = width - 10, top = 10, bottom = height - 20;
  auto y_of = [&](double v) { return bottom - static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) * (bottom - top))); };
  for (int g = 0; g <= 10; ++g) detail::fill_rect(img, y_of(g / 10.0), left, y_of(g / 10.0) + 1, right, {225, 225, 225});
  const int slot = bars.empty() ? 0 : (right - left) / static_cast<int>(bars.size());
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const int x0 = left + static_cast<int>(i) * slot + slot / 5, x1 = left + static_cast<int>(i + 1) * slot - slot / 5;
    detail::fill_rect(img, y_of(bars[i].value), x0, bottom, x1, bars[i].color);
    const int xm = (x0 + x1) / 2;
    const int ylo = y_of(bars[i].value - bars[i].error), yhi = y_of(bars[i].value + bars[i].error);
    detail::fill_rect(img, yhi, xm - 1, ylo + 1, xm + 2, {0, 0, 0});
    detail::fill_rect(img, yhi, xm - 6, yhi + 2, xm + 7, {0, 0, 0});
    detail::fill_rect(img, ylo - 1, xm - 6, ylo + 1, xm + 7, {0, 0, 0});
  }
  detail::fill_rect(img, top, left - 2, bottom + 1, left, {0, 0, 0});
  detail::fill_rect(img, bottom, left - 2, bottom + 2, right, {0, 0, 0});
  return img;
}

inline RgbImage report_chart(const EvalReport& r) {
  const std::array<Bar, 2> bars{Bar{r.mean, r.stderr_, {70, 110, 180}},
                                Bar{r.baseline_mean, r.baseline_stderr, {200, 120, 60}}};
  return bar_chart(bars);
}

}  // namespace tactile
