#pragma once

#include <array>
#include <limits>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "json.hpp"
#include "tactile/kdtree.hpp"
#include "tactile/voxel.hpp"

namespace tactile {

struct IcpParams {
  int max_iterations = 50;
  double transform_epsilon = 1e-6;
  double max_correspondence_dist = 0.05;  // m

  bool valid() const { return max_iterations > 0 && transform_epsilon > 0 && max_correspondence_dist > 0; }
};

struct CoarseParams {
  double feature_radius = 0.02;  // m, FPFH support
  double leaf = 0.005;           // m, voxel size of the clouds fed to the feature stage; 0 disables
  int iterations = 500;
  int k_feature_matches = 5;
  double inlier_dist = 0.01;     // m
  double edge_similarity = 0.9;  // polygon prerejection; 0 disables
  std::size_t score_samples = 400;
  // Sensor positions in the scene frame. When given, hypotheses are also
  // scored by how many model points facing a sensor have scene support,
  // which separates poses that explain a partial view equally well.
  std::vector<Vec3> viewpoints;
  double facing_cos = 0.2;
  // Point-pair hypotheses: two scene points with normals matched to model
  // pairs with the same quantized (distance, three angles) signature.
  int pair_iterations = 800;
  std::size_t pair_model_points = 500;
  int pair_matches_per_sample = 2;
  double pair_angle_step_deg = 12.0;
};

struct RegistrationConfig {
  CoarseParams coarse;
  IcpParams icp;
  std::size_t candidates = 6;        // coarse hypotheses refined before the final ICP
  int candidate_icp_iterations = 30;
  double select_dist = 0.004;        // m, inlier distance when ranking refined candidates
  double icp_leaf = 0.0;             // m; 0 runs ICP on the clouds as given
  int restarts = 12;                 // perturbed ICP restarts around the converged pose
  double restart_rotation_deg = 3.0;
  double restart_translation = 0.003;  // m
  double acceptance_fitness = 2.5e-5;  // m^2; worse fits are reported as failed registrations
};

/// Model -> scene alignment.
struct RegistrationResult {
  RigidTransform pose;
  double fitness = 0.0;  // mean squared correspondence distance, m^2
  int iterations = 0;
  bool converged = false;
};

// ---------------------------------------------------------------------------
// Closed-form rigid fit
// ---------------------------------------------------------------------------

/// Least-squares rigid transform taking src[i] onto dst[i] (SVD form, no
/// scale, reflection-corrected).
inline RigidTransform fit_rigid(std::span<const Vec3> src, std::span<const Vec3> dst) {
  require(src.size() == dst.size() && !src.empty(), ErrorCode::InvalidArgument,
          "rigid fit needs equal, non-empty correspondence lists");
  Vec3 ms = Vec3::Zero(), md = Vec3::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    ms += src[i];
    md += dst[i];
  }
  ms /= static_cast<double>(src.size());
  md /= static_cast<double>(dst.size());
  Mat3 h = Mat3::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) h += (src[i] - ms) * (dst[i] - md).transpose();
  Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Mat3 u = svd.matrixU();
  const Mat3 v = svd.matrixV();
  Mat3 d = Mat3::Identity();
  d(2, 2) = (v * u.transpose()).determinant() < 0 ? -1.0 : 1.0;
  const Mat3 r = v * d * u.transpose();
  return {r, md - r * ms};
}

/// True when the cloud holds at least three non-collinear points.
inline bool has_noncollinear_triple(const PointCloud& cloud, double tol = 1e-9) {
  if (cloud.size() < 3) return false;
  const Vec3& a = cloud.points.front();
  std::size_t far = 0;
  double best = 0.0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const double d = (cloud.points[i] - a).squaredNorm();
    if (d > best) best = d, far = i;
  }
  if (best <= tol * tol) return false;
  const Vec3 dir = (cloud.points[far] - a).normalized();
  for (const auto& p : cloud.points)
    if ((p - a).cross(dir).norm() > tol) return true;
  return false;
}

// ---------------------------------------------------------------------------
// Normals and fast point feature histograms
// ---------------------------------------------------------------------------

/// PCA normals over a radius neighborhood. With no viewpoints they are
/// oriented away from the cloud centroid; otherwise towards the nearest
/// viewpoint. Points with fewer than three neighbors take that reference
/// direction itself.
inline std::vector<Vec3> estimate_normals(const PointCloud& cloud, const KdTree& tree, double radius,
                                          std::span<const Vec3> viewpoints = {}) {
  const Vec3 center = centroid(cloud);
  std::vector<Vec3> normals(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.points[i];
    const auto nbrs = tree.radius_search(p, radius);
    Vec3 outward = p - center;
    if (!viewpoints.empty()) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& v : viewpoints)
        if ((v - p).squaredNorm() < best) {
          best = (v - p).squaredNorm();
          outward = v - p;
        }
    }
    if (outward.norm() < 1e-12) outward = Vec3::UnitZ();
    Vec3 n;
    if (nbrs.size() < 3) {
      n = outward.normalized();
    } else {
      Vec3 mean = Vec3::Zero();
      for (std::size_t j : nbrs) mean += tree.point(j);
      mean /= static_cast<double>(nbrs.size());
      Mat3 cov = Mat3::Zero();
      for (std::size_t j : nbrs) {
        const Vec3 d = tree.point(j) - mean;
        cov += d * d.transpose();
      }
      Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
      n = eig.eigenvectors().col(0).normalized();
    }
    if (n.dot(outward) < 0) n = -n;
    normals[i] = n;
  }
  return normals;
}

using Fpfh = std::array<float, 33>;

namespace detail {

/// Darboux-frame pair features (theta, alpha, phi) with the source chosen as
/// the point whose normal makes the smaller angle with the connecting line.
inline bool pair_features(const Vec3& p1, const Vec3& n1, const Vec3& p2, const Vec3& n2, double& theta,
                          double& alpha, double& phi) {
  Vec3 dp = p2 - p1;
  const double len = dp.norm();
  if (len <= 0.0) return false;
  Vec3 src_n = n1, tgt_n = n2;
  const double a1 = n1.dot(dp) / len;
  const double a2 = n2.dot(dp) / len;
  if (std::acos(std::abs(a1)) > std::acos(std::abs(a2))) {
    src_n = n2;
    tgt_n = n1;
    dp = -dp;
    phi = -a2;
  } else {
    phi = a1;
  }
  Vec3 v = dp.cross(src_n);
  const double vn = v.norm();
  if (vn <= 0.0) {
    theta = alpha = 0.0;
    return true;
  }
  v /= vn;
  const Vec3 w = src_n.cross(v);
  alpha = v.dot(tgt_n);
  theta = std::atan2(w.dot(tgt_n), src_n.dot(tgt_n));
  return true;
}

inline int bin11(double value, double lo, double hi) {
  const int b = static_cast<int>(std::floor(11.0 * (value - lo) / (hi - lo)));
  return std::clamp(b, 0, 10);
}

}  // namespace detail

/// Fast point feature histograms (3 x 11 bins, each sub-histogram scaled to
/// sum to 100 for the point itself plus 100 for its distance-weighted
/// neighborhood).
inline std::vector<Fpfh> compute_fpfh(const PointCloud& cloud, std::span<const Vec3> normals, const KdTree& tree,
                                      double radius) {
  const std::size_t n = cloud.size();
  std::vector<Fpfh> spfh(n);
  std::vector<std::vector<std::size_t>> neighborhoods(n);
  for (std::size_t i = 0; i < n; ++i) {
    Fpfh h{};
    neighborhoods[i] = tree.radius_search(cloud.points[i], radius);
    int pairs = 0;
    for (std::size_t j : neighborhoods[i]) {
      if (j == i) continue;
      double theta, alpha, phi;
      if (!detail::pair_features(cloud.points[i], normals[i], cloud.points[j], normals[j], theta, alpha, phi))
        continue;
      h[detail::bin11(theta, -std::numbers::pi, std::numbers::pi)] += 1.0f;
      h[11 + detail::bin11(alpha, -1.0, 1.0)] += 1.0f;
      h[22 + detail::bin11(phi, -1.0, 1.0)] += 1.0f;
      ++pairs;
    }
    if (pairs > 0)
      for (auto& v : h) v *= 100.0f / static_cast<float>(pairs);
    spfh[i] = h;
  }

  std::vector<Fpfh> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::array<double, 33> acc{};
    for (std::size_t j : neighborhoods[i]) {
      if (j == i) continue;
      const double d = (cloud.points[j] - cloud.points[i]).norm();
      if (d <= 0.0) continue;
      for (int b = 0; b < 33; ++b) acc[b] += spfh[j][b] / d;
    }
    for (int part = 0; part < 3; ++part) {
      double sum = 0.0;
      for (int b = 0; b < 11; ++b) sum += acc[part * 11 + b];
      const double scale = sum > 0 ? 100.0 / sum : 0.0;
      for (int b = 0; b < 11; ++b)
        out[i][part * 11 + b] = spfh[i][part * 11 + b] + static_cast<float>(acc[part * 11 + b] * scale);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Coarse alignment
// ---------------------------------------------------------------------------

namespace detail {

/// Quantized point-pair signature: |d|, angle(n1, d), angle(n2, d),
/// angle(n1, n2).
inline std::uint64_t pair_key(const Vec3& p1, const Vec3& n1, const Vec3& p2, const Vec3& n2, double dist_step,
                              double angle_step) {
  const Vec3 d = p2 - p1;
  const double len = d.norm();
  auto angle = [](const Vec3& a, const Vec3& b) { return std::acos(std::clamp(a.dot(b), -1.0, 1.0)); };
  const auto q = [](double v, double step) { return static_cast<std::uint64_t>(std::max(0.0, std::floor(v / step))); };
  const Vec3 u = d / len;
  return (q(len, dist_step) << 24) | (q(angle(n1, u), angle_step) << 16) | (q(angle(n2, u), angle_step) << 8) |
         q(angle(n1, n2), angle_step);
}

/// Frame with x along n1 and y along the part of (p2 - p1) orthogonal to n1.
inline bool pair_frame(const Vec3& p1, const Vec3& n1, const Vec3& p2, Mat3& frame) {
  const Vec3 d = p2 - p1;
  Vec3 y = d - d.dot(n1) * n1;
  if (y.norm() < 1e-6 * d.norm()) return false;
  y.normalize();
  frame.col(0) = n1;
  frame.col(1) = y;
  frame.col(2) = n1.cross(y);
  return true;
}

}  // namespace detail

/// Support score of a model -> scene pose: the fraction of sampled scene
/// points with a model point within `dist`, plus (when viewpoints are given)
/// the fraction of sampled model points facing a viewpoint that have a scene
/// point within `dist`.
struct PoseScorer {
  const PointCloud& model;
  const KdTree& mtree;
  std::span<const Vec3> model_normals;
  const PointCloud& scene;
  const KdTree& stree;
  std::vector<std::size_t> scene_samples, model_samples;
  std::span<const Vec3> viewpoints;
  double facing_cos = 0.2;

  PoseScorer(const PointCloud& m, const KdTree& mt, std::span<const Vec3> mn, const PointCloud& s, const KdTree& st,
             std::size_t samples, std::span<const Vec3> views, double cos_min)
      : model(m), mtree(mt), model_normals(mn), scene(s), stree(st), viewpoints(views), facing_cos(cos_min) {
    const std::size_t n = std::max<std::size_t>(1, samples);
    for (std::size_t i = 0; i < s.size(); i += std::max<std::size_t>(1, s.size() / n)) scene_samples.push_back(i);
    if (!views.empty())
      for (std::size_t i = 0; i < m.size(); i += std::max<std::size_t>(1, m.size() / n)) model_samples.push_back(i);
  }

  /// Returns (score, summed squared distance of scene inliers). `step` > 1
  /// evaluates every step-th sample only.
  std::pair<double, double> operator()(const RigidTransform& pose, double dist, std::size_t step = 1) const {
    const double d2 = dist * dist;
    const RigidTransform inv = pose.inverse();
    std::size_t inliers = 0, used = 0;
    double sse = 0.0;
    for (std::size_t k = 0; k < scene_samples.size(); k += step) {
      const std::size_t i = scene_samples[k];
      ++used;
      const Neighbor nb = mtree.nearest(inv.apply(scene.points[i]), d2);
      if (nb.index < model.size()) {
        ++inliers;
        sse += nb.sq_dist;
      }
    }
    double score = static_cast<double>(inliers) / static_cast<double>(used);
    std::size_t facing = 0, supported = 0;
    for (std::size_t k = 0; k < model_samples.size(); k += step) {
      const std::size_t i = model_samples[k];
      const Vec3 p = pose.apply(model.points[i]);
      const Vec3 n = pose.rotate(model_normals[i]);
      bool seen = false;
      for (const auto& v : viewpoints) {
        const Vec3 ray = v - p;
        if (n.dot(ray) > facing_cos * ray.norm()) seen = true;
      }
      if (!seen) continue;
      ++facing;
      if (stree.nearest(p, d2).index < scene.size()) ++supported;
    }
    if (facing > 0) score += static_cast<double>(supported) / static_cast<double>(facing);
    return {score, sse};
  }
};

struct ScoredPose {
  RigidTransform pose;
  double score = 0.0;
  double sse = 0.0;
};

/// Sample-consensus alignment on FPFH correspondences, returning up to
/// `count` mutually distinct hypotheses, best first.
///
/// Each hypothesis draws three well-separated scene points, pairs each with
/// one of its k most similar model features, rejects the triple unless the
/// two triangles have matching edge lengths, fits the rigid pose, and scores
/// it with PoseScorer at `inlier_dist`. Ties go to the smaller summed squared
/// inlier distance. Two hypotheses are distinct when they differ by more than
/// 2 feature radii in translation or 30 degrees in rotation.
inline std::vector<ScoredPose> coarse_candidates(const PointCloud& model, const PointCloud& scene,
                                                 const CoarseParams& params, std::uint64_t seed,
                                                 std::size_t count) {
  require(params.feature_radius > 0, ErrorCode::InvalidArgument, "feature radius must be > 0");
  require(has_noncollinear_triple(model), ErrorCode::DegenerateCloud, "model has < 3 non-collinear points");
  require(has_noncollinear_triple(scene), ErrorCode::DegenerateCloud, "scene has < 3 non-collinear points");

  const PointCloud m = params.leaf > 0 ? voxel_downsample(model, params.leaf) : model;
  const PointCloud s = params.leaf > 0 ? voxel_downsample(scene, params.leaf) : scene;
  require(has_noncollinear_triple(m) && has_noncollinear_triple(s), ErrorCode::DegenerateCloud,
          "cloud degenerates after feature downsampling");

  const KdTree mtree(m.points), stree(s.points);
  const double normal_radius = 0.5 * params.feature_radius;
  const auto mn = m.has_normals() ? m.normals : estimate_normals(m, mtree, normal_radius);
  const auto sn = estimate_normals(s, stree, normal_radius, params.viewpoints);
  const auto mf = compute_fpfh(m, mn, mtree, params.feature_radius);
  const auto sf = compute_fpfh(s, sn, stree, params.feature_radius);

  // k most similar model features per scene point.
  const std::size_t k = std::min<std::size_t>(std::max(1, params.k_feature_matches), m.size());
  std::vector<std::vector<std::size_t>> matches(s.size());
  {
    std::vector<std::pair<float, std::size_t>> dist(m.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      for (std::size_t j = 0; j < m.size(); ++j) {
        float d = 0.0f;
        for (int b = 0; b < 33; ++b) {
          const float diff = sf[i][b] - mf[j][b];
          d += diff * diff;
        }
        dist[j] = {d, j};
      }
      std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
      for (std::size_t r = 0; r < k; ++r) matches[i].push_back(dist[r].second);
    }
  }

  const PoseScorer scorer(m, mtree, mn, s,
                          stree, params.score_samples, params.viewpoints, params.facing_cos);
  const double min_sep2 = std::pow(0.5 * params.feature_radius, 2);
  const double same_t = 2.0 * params.feature_radius, same_deg = 30.0;
  auto better = [](const ScoredPose& a, const ScoredPose& b) {
    return a.score > b.score || (a.score == b.score && a.sse < b.sse);
  };
  std::vector<ScoredPose> top;
  auto offer = [&](const ScoredPose& cand) {
    for (auto& t : top) {
      if (translation_error(t.pose, cand.pose) < same_t && rotation_error_deg(t.pose.rotation, cand.pose.rotation) < same_deg) {
        if (better(cand, t)) {
          t = cand;
          std::stable_sort(top.begin(), top.end(), better);
        }
        return;
      }
    }
    top.push_back(cand);
    std::stable_sort(top.begin(), top.end(), better);
    if (top.size() > count) top.pop_back();
  };

  // Cheap screening on every 8th sample before the full score.
  auto consider = [&](const RigidTransform& hyp) {
    if (!top.empty() && scorer(hyp, params.inlier_dist, 8).first < 0.85 * top.front().score) return;
    const auto [score, sse] = scorer(hyp, params.inlier_dist);
    if (score > 0) offer({hyp, score, sse});
  };

  Rng rng(seed);
  for (int it = 0; it < params.iterations; ++it) {
    std::array<std::size_t, 3> si{};
    bool ok = true;
    for (int c = 0; c < 3 && ok; ++c) {
      ok = false;
      for (int attempt = 0; attempt < 20; ++attempt) {
        const std::size_t cand = rng.index(s.size());
        bool far_enough = true;
        for (int prev = 0; prev < c; ++prev)
          if ((s.points[cand] - s.points[si[prev]]).squaredNorm() < min_sep2) far_enough = false;
        if (far_enough) {
          si[c] = cand;
          ok = true;
          break;
        }
      }
    }
    if (!ok) continue;
    std::array<Vec3, 3> src, dst;
    for (int c = 0; c < 3; ++c) {
      const auto& cands = matches[si[c]];
      src[c] = m.points[cands[rng.index(cands.size())]];
      dst[c] = s.points[si[c]];
    }
    if (params.edge_similarity > 0) {
      bool similar = true;
      for (int a = 0; a < 3 && similar; ++a) {
        const int b = (a + 1) % 3;
        const double ls = (dst[a] - dst[b]).norm(), lm = (src[a] - src[b]).norm();
        if (std::min(ls, lm) < params.edge_similarity * std::max(ls, lm)) similar = false;
      }
      if (!similar) continue;
    }
    if ((src[1] - src[0]).cross(src[2] - src[0]).norm() < 1e-12) continue;
    consider(fit_rigid(src, dst));
  }
  if (params.pair_iterations > 0) {
    const double dist_step = 0.25 * params.feature_radius;
    const double angle_step = params.pair_angle_step_deg * std::numbers::pi / 180.0;
    std::vector<std::size_t> sub;
    const std::size_t stride = std::max<std::size_t>(1, m.size() / std::max<std::size_t>(1, params.pair_model_points));
    for (std::size_t i = 0; i < m.size(); i += stride) sub.push_back(i);
    struct Entry {
      std::uint64_t key;
      std::uint32_t i, j;
    };
    std::vector<Entry> table;
    table.reserve(sub.size() * sub.size());
    for (std::size_t a : sub)
      for (std::size_t b : sub) {
        if (a == b || (m.points[b] - m.points[a]).squaredNorm() < min_sep2) continue;
        table.push_back({detail::pair_key(m.points[a], mn[a], m.points[b], mn[b], dist_step, angle_step),
                         static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)});
      }
    std::sort(table.begin(), table.end(), [](const Entry& x, const Entry& y) {
      return x.key != y.key ? x.key < y.key : (x.i != y.i ? x.i < y.i : x.j < y.j);
    });

    for (int it = 0; it < params.pair_iterations; ++it) {
      const std::size_t a = rng.index(s.size());
      std::size_t b = a;
      for (int attempt = 0; attempt < 20 && b == a; ++attempt) {
        const std::size_t cand = rng.index(s.size());
        if ((s.points[cand] - s.points[a]).squaredNorm() >= min_sep2) b = cand;
      }
      if (b == a) continue;
      Mat3 fs;
      if (!detail::pair_frame(s.points[a], sn[a], s.points[b], fs)) continue;
      const std::uint64_t key = detail::pair_key(s.points[a], sn[a], s.points[b], sn[b], dist_step, angle_step);
      const auto lo = std::lower_bound(table.begin(), table.end(), key,
                                       [](const Entry& e, std::uint64_t k) { return e.key < k; });
      auto hi = lo;
      while (hi != table.end() && hi->key == key) ++hi;
      const auto found = static_cast<std::size_t>(hi - lo);
      if (found == 0) continue;
      const int tries = std::min<int>(params.pair_matches_per_sample, static_cast<int>(found));
      for (int t = 0; t < tries; ++t) {
        const Entry& e = *(lo + static_cast<std::ptrdiff_t>(rng.index(found)));
        Mat3 fm;
        if (!detail::pair_frame(m.points[e.i], mn[e.i], m.points[e.j], fm)) continue;
        const Mat3 r = fs * fm.transpose();
        consider(RigidTransform{r, s.points[a] - r * m.points[e.i]});
      }
    }
  }
  if (top.empty()) top.push_back({RigidTransform::from_translation(centroid(s) - centroid(m)), 0.0, 0.0});
  return top;
}

/// Best sample-consensus hypothesis; see coarse_candidates.
inline RigidTransform coarse_align(const PointCloud& model, const PointCloud& scene, const CoarseParams& params,
                                   std::uint64_t seed) {
  return coarse_candidates(model, scene, params, seed, 1).front().pose;
}

inline RigidTransform coarse_align(const PointCloud& model, const PointCloud& scene, double feature_radius,
                                   std::uint64_t seed) {
  CoarseParams params;
  params.feature_radius = feature_radius;
  return coarse_align(model, scene, params, seed);
}

// ---------------------------------------------------------------------------
// ICP
// ---------------------------------------------------------------------------

/// Point-to-point ICP. Every scene point is paired with its nearest model
/// point under the current pose (pairs farther than max_correspondence_dist
/// are dropped) and the pose is refit in closed form. Stops after
/// max_iterations updates or once an update moves the pose by less than
/// transform_epsilon (Frobenius rotation change + translation change in m).
/// `trace`, when given, receives the fitness measured before every update.
inline RegistrationResult icp_refine(const PointCloud& model, const PointCloud& scene, const RigidTransform& init,
                                     const IcpParams& params, std::vector<double>* trace = nullptr) {
  require(params.valid(), ErrorCode::InvalidArgument, "ICP parameters must be strictly positive");
  require(!model.empty() && !scene.empty(), ErrorCode::NoCorrespondences, "ICP on an empty cloud");
  const KdTree tree(model.points);
  const double max2 = params.max_correspondence_dist * params.max_correspondence_dist;

  std::vector<Vec3> src, dst;
  src.reserve(scene.size());
  dst.reserve(scene.size());
  auto correspond = [&](const RigidTransform& pose) {
    src.clear();
    dst.clear();
    const RigidTransform inv = pose.inverse();
    double sse = 0.0;
    for (const auto& sp : scene.points) {
      const Neighbor nb = tree.nearest(inv.apply(sp), max2);
      if (nb.index >= model.size()) continue;
      src.push_back(model.points[nb.index]);
      dst.push_back(sp);
      sse += (pose.apply(model.points[nb.index]) - sp).squaredNorm();
    }
    return src.empty() ? 0.0 : sse / static_cast<double>(src.size());
  };

  RegistrationResult result{init, 0.0, 0, false};
  double fitness = correspond(init);
  require(!src.empty(), ErrorCode::NoCorrespondences, "no point pair within the correspondence distance");
  while (result.iterations < params.max_iterations) {
    if (trace) trace->push_back(fitness);
    const RigidTransform next = fit_rigid(src, dst);
    const RigidTransform delta = next * result.pose.inverse();
    const double change = (delta.rotation - Mat3::Identity()).norm() + delta.translation.norm();
    result.pose = next;
    ++result.iterations;
    fitness = correspond(result.pose);
    if (src.empty()) break;
    if (change < params.transform_epsilon) {
      result.converged = true;
      break;
    }
  }
  if (trace) trace->push_back(fitness);
  result.fitness = fitness;
  return result;
}

/// Coarse alignment followed by ICP. The best `candidates` coarse
/// hypotheses are each refined briefly against the feature-resolution scene
/// and rescored at `select_dist`; the winner is refined on the clouds as
/// given (or at icp_leaf). Refining against a resampled scene keeps ICP out
/// of the grid-locked minima that identical samplings produce.
inline RegistrationResult register_model(const PointCloud& model, const PointCloud& scene,
                                         const RegistrationConfig& config, std::uint64_t seed) {
  require(!model.empty() && !scene.empty(), ErrorCode::InvalidArgument, "registration inputs must be non-empty");
  const auto cands = coarse_candidates(model, scene, config.coarse, seed, std::max<std::size_t>(1, config.candidates));
  RigidTransform init = cands.front().pose;
  if (cands.size() > 1) {
    const double leaf = config.coarse.leaf;
    const PointCloud m = leaf > 0 ? voxel_downsample(model, leaf) : model;
    const PointCloud s = leaf > 0 ? voxel_downsample(scene, leaf) : scene;
    const KdTree mtree(m.points), stree(s.points);
    const std::vector<Vec3> mn = m.has_normals() ? m.normals : estimate_normals(m, mtree, 0.5 * config.coarse.feature_radius);
    const PoseScorer scorer(m, mtree, mn, s, stree, config.coarse.score_samples, config.coarse.viewpoints,
                            config.coarse.facing_cos);
    IcpParams quick = config.icp;
    quick.max_iterations = std::min(quick.max_iterations, config.candidate_icp_iterations);
    double best = -1.0;
    for (const auto& c : cands) {
      RigidTransform pose = c.pose;
      try {
        pose = icp_refine(model, s, c.pose, quick).pose;
      } catch (const Error&) {
      }
      const double score = scorer(pose, config.select_dist).first;
      if (score > best) {
        best = score;
        init = pose;
      }
    }
  }
  const PointCloud fm = config.icp_leaf > 0 ? voxel_downsample(model, config.icp_leaf) : model;
  const PointCloud fs = config.icp_leaf > 0 ? voxel_downsample(scene, config.icp_leaf) : scene;
  RegistrationResult best = icp_refine(fm, fs, init, config.icp);

  // Local restarts around the converged pose, perturbed in the model frame
  // about the model centroid; the lowest fitness wins.
  if (config.restarts > 0 && best.fitness > 0.0) {
    Rng rng(derive_seed(seed, 0x1CE));
    const Vec3 c = centroid(fm);
    const RigidTransform center = best.pose;
    for (int r = 0; r < config.restarts; ++r) {
      Vec3 axis(rng.normal(), rng.normal(), rng.normal());
      Vec3 dir(rng.normal(), rng.normal(), rng.normal());
      if (axis.norm() < 1e-12 || dir.norm() < 1e-12) continue;
      const double angle = rng.uniform(0.0, config.restart_rotation_deg) * std::numbers::pi / 180.0;
      const RigidTransform spin = RigidTransform::from_axis_angle(axis.normalized(), angle, Vec3::Zero());
      const RigidTransform offset{spin.rotation, c - spin.rotation * c +
                                                     rng.uniform(0.0, config.restart_translation) * dir.normalized()};
      try {
        RegistrationResult cand = icp_refine(fm, fs, center * offset, config.icp);
        if (cand.fitness < best.fitness) best = cand;
      } catch (const Error&) {
      }
    }
  }
  return best;
}

inline bool accepted(const RegistrationResult& result, const RegistrationConfig& config) {
  return result.fitness <= config.acceptance_fitness;
}

// ---------------------------------------------------------------------------
// Pose serialization: row-major rotation, translation in meters.
// ---------------------------------------------------------------------------

inline nlohmann::json pose_to_json(const RigidTransform& pose) {
  nlohmann::json j;
  std::vector<double> r;
  for (int row = 0; row < 3; ++row)
    for (int col = 0; col < 3; ++col) r.push_back(pose.rotation(row, col));
  j["rotation"] = r;
  j["translation"] = {pose.translation.x(), pose.translation.y(), pose.translation.z()};
  j["units"] = "m";
  return j;
}

inline RigidTransform pose_from_json(const nlohmann::json& j) {
  try {
    const auto r = j.at("rotation").get<std::vector<double>>();
    const auto t = j.at("translation").get<std::vector<double>>();
    require(r.size() == 9 && t.size() == 3, ErrorCode::Parse, "pose needs 9 rotation and 3 translation values");
    RigidTransform pose;
    for (int row = 0; row < 3; ++row)
      for (int col = 0; col < 3; ++col) pose.rotation(row, col) = r[static_cast<std::size_t>(row * 3 + col)];
    pose.translation = Vec3(t[0], t[1], t[2]);
    require(pose.is_valid(1e-6), ErrorCode::Parse, "pose rotation is not orthonormal");
    return pose;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("bad pose JSON: ") + e.what());
  }
}

inline nlohmann::json registration_to_json(const RegistrationResult& r) {
  return {{"pose", pose_to_json(r.pose)},
          {"fitness", r.fitness},
          {"iterations", r.iterations},
          {"converged", r.converged}};
}

}  // namespace tactile
