#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <deque>
#include <unordered_map>
#include <vector>

#include <Eigen/Eigenvalues>

#include "tactile/geometry.hpp"

namespace tactile {

// ---------------------------------------------------------------------------
// Hash grid with cubic cells anchored at a given origin. Shared by the
// clustering and voxel code.
// ---------------------------------------------------------------------------

struct CellKey {
  std::int64_t x, y, z;
  friend bool operator==(const CellKey&, const CellKey&) = default;
  friend auto operator<=>(const CellKey&, const CellKey&) = default;
};

struct CellKeyHash {
  std::size_t operator()(const CellKey& k) const noexcept {
    std::uint64_t h = splitmix64(static_cast<std::uint64_t>(k.x));
    h = splitmix64(h ^ static_cast<std::uint64_t>(k.y));
    return static_cast<std::size_t>(splitmix64(h ^ static_cast<std::uint64_t>(k.z)));
  }
};

inline CellKey cell_of(const Vec3& p, const Vec3& origin, double cell) {
  return {static_cast<std::int64_t>(std::floor((p.x() - origin.x()) / cell)),
          static_cast<std::int64_t>(std::floor((p.y() - origin.y()) / cell)),
          static_cast<std::int64_t>(std::floor((p.z() - origin.z()) / cell))};
}

// ---------------------------------------------------------------------------
// Plane removal
// ---------------------------------------------------------------------------

struct Plane {
  Vec3 normal = Vec3::UnitZ();  // unit
  double offset = 0.0;          // n . p + offset = 0

  double distance(const Vec3& p) const { return std::abs(normal.dot(p) + offset); }
};

/// Least-squares plane through the given points (smallest principal axis).
inline Plane fit_plane(const PointCloud& cloud, std::span<const std::size_t> indices) {
  Vec3 mean = Vec3::Zero();
  for (std::size_t i : indices) mean += cloud.points[i];
  mean /= static_cast<double>(indices.size());
  Mat3 cov = Mat3::Zero();
  for (std::size_t i : indices) {
    const Vec3 d = cloud.points[i] - mean;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  const Vec3 n = eig.eigenvectors().col(0).normalized();
  return {n, -n.dot(mean)};
}

/// Indices (ascending) that survive repeated largest-plane removal.
///
/// Each round runs `iterations` random-sample-consensus trials over the
/// remaining points, refits the winning plane by least squares and removes
/// its inliers, provided they make up at least `min_inlier_frac` of the
/// original input. Stops at the first round that falls short.
inline std::vector<std::size_t> remove_planes_indices(const PointCloud& cloud, double dist_thresh,
                                                      double min_inlier_frac, std::uint64_t seed,
                                                      int iterations = 200) {
  require(dist_thresh > 0.0, ErrorCode::InvalidArgument, "plane distance threshold must be > 0");
  require(min_inlier_frac > 0.0 && min_inlier_frac < 1.0, ErrorCode::InvalidArgument,
          "plane inlier fraction must be in (0, 1)");
  std::vector<std::size_t> remaining(cloud.size());
  for (std::size_t i = 0; i < remaining.size(); ++i) remaining[i] = i;
  const double needed = min_inlier_frac * static_cast<double>(cloud.size());
  Rng rng(seed);

  auto count_inliers = [&](const Plane& plane) {
    std::size_t count = 0;
    for (std::size_t i : remaining)
      if (plane.distance(cloud.points[i]) <= dist_thresh) ++count;
    return count;
  };

  while (remaining.size() >= 3) {
    Plane best;
    std::size_t best_count = 0;
    for (int it = 0; it < iterations; ++it) {
      const std::size_t i0 = rng.index(remaining.size());
      std::size_t i1 = rng.index(remaining.size());
      while (i1 == i0) i1 = rng.index(remaining.size());
      std::size_t i2 = rng.index(remaining.size());
      while (i2 == i0 || i2 == i1) i2 = rng.index(remaining.size());
      const Vec3& a = cloud.points[remaining[i0]];
      const Vec3& b = cloud.points[remaining[i1]];
      const Vec3& c = cloud.points[remaining[i2]];
      const Vec3 n = (b - a).cross(c - a);
      if (n.norm() < 1e-12) continue;
      const Plane candidate{n.normalized(), -n.normalized().dot(a)};
      const std::size_t count = count_inliers(candidate);
      if (count > best_count) {
        best_count = count;
        best = candidate;
      }
    }
    if (best_count == 0 || static_cast<double>(best_count) < needed) break;

    std::vector<std::size_t> inliers;
    for (std::size_t i : remaining)
      if (best.distance(cloud.points[i]) <= dist_thresh) inliers.push_back(i);
    if (inliers.size() >= 3) {
      const Plane refined = fit_plane(cloud, inliers);
      if (count_inliers(refined) >= best_count) best = refined;
    }

    std::vector<std::size_t> kept;
    kept.reserve(remaining.size());
    for (std::size_t i : remaining)
      if (best.distance(cloud.points[i]) > dist_thresh) kept.push_back(i);
    remaining.swap(kept);
  }
  return remaining;
}

inline PointCloud remove_planes(const PointCloud& cloud, double dist_thresh, double min_inlier_frac,
                                std::uint64_t seed, int iterations = 200) {
  const auto keep = remove_planes_indices(cloud, dist_thresh, min_inlier_frac, seed, iterations);
  return cloud.select(keep);
}

// ---------------------------------------------------------------------------
// Euclidean clustering
// ---------------------------------------------------------------------------

/// Connected components of the graph joining points closer than `tol`
/// (inclusive). Components outside [min_size, max_size] are dropped. Result
/// is sorted largest first (ties by smallest member index); members ascend.
inline std::vector<std::vector<std::size_t>> euclidean_cluster_indices(const PointCloud& cloud, double tol,
                                                                       std::size_t min_size,
                                                                       std::size_t max_size) {
  require(tol > 0.0, ErrorCode::InvalidArgument, "cluster tolerance must be > 0");
  require(min_size <= max_size, ErrorCode::InvalidArgument, "cluster min_size > max_size");
  std::vector<std::vector<std::size_t>> clusters;
  if (cloud.empty()) return clusters;

  const Vec3 origin = bounding_box(cloud).min;
  std::unordered_map<CellKey, std::vector<std::size_t>, CellKeyHash> grid;
  grid.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) grid[cell_of(cloud.points[i], origin, tol)].push_back(i);

  const double tol2 = tol * tol;
  std::vector<char> visited(cloud.size(), 0);
  std::deque<std::size_t> frontier;
  for (std::size_t seed = 0; seed < cloud.size(); ++seed) {
    if (visited[seed]) continue;
    std::vector<std::size_t> members;
    visited[seed] = 1;
    frontier.push_back(seed);
    while (!frontier.empty()) {
      const std::size_t cur = frontier.front();
      frontier.pop_front();
      members.push_back(cur);
      const Vec3& p = cloud.points[cur];
      const CellKey c = cell_of(p, origin, tol);
      for (std::int64_t dx = -1; dx <= 1; ++dx)
        for (std::int64_t dy = -1; dy <= 1; ++dy)
          for (std::int64_t dz = -1; dz <= 1; ++dz) {
            const auto it = grid.find({c.x + dx, c.y + dy, c.z + dz});
            if (it == grid.end()) continue;
            for (std::size_t j : it->second) {
              if (visited[j] || (cloud.points[j] - p).squaredNorm() > tol2) continue;
              visited[j] = 1;
              frontier.push_back(j);
            }
          }
    }
    if (members.size() < min_size || members.size() > max_size) continue;
    std::sort(members.begin(), members.end());
    clusters.push_back(std::move(members));
  }
  std::stable_sort(clusters.begin(), clusters.end(),
                   [](const auto& a, const auto& b) { return a.size() > b.size(); });
  return clusters;
}

inline std::vector<PointCloud> euclidean_cluster(const PointCloud& cloud, double tol, std::size_t min_size,
                                                 std::size_t max_size) {
  std::vector<PointCloud> out;
  for (const auto& members : euclidean_cluster_indices(cloud, tol, min_size, max_size))
    out.push_back(cloud.select(members));
  return out;
}

// ---------------------------------------------------------------------------
// Object segmentation: crop -> plane removal -> largest Euclidean cluster.
// ---------------------------------------------------------------------------

struct SegmentationParams {
  Aabb workspace{Vec3(-0.2, -0.2, -0.02), Vec3(0.2, 0.2, 0.4)};
  double plane_dist = 0.005;
  double plane_min_frac = 0.2;
  int plane_iterations = 200;
  double cluster_tol = 0.02;
  std::size_t cluster_min = 500;
  std::size_t cluster_max = 1000000;
};

/// Indices into `scene` of the segmented object (ascending).
inline std::vector<std::size_t> segment_object_indices(const PointCloud& scene, const SegmentationParams& params,
                                                       std::uint64_t seed) {
  std::vector<std::size_t> cropped;
  for (std::size_t i = 0; i < scene.size(); ++i)
    if (params.workspace.contains(scene.points[i])) cropped.push_back(i);
  const PointCloud work = scene.select(cropped);

  const auto off_plane =
      remove_planes_indices(work, params.plane_dist, params.plane_min_frac, seed, params.plane_iterations);
  const PointCloud objects = work.select(off_plane);
  const auto clusters =
      euclidean_cluster_indices(objects, params.cluster_tol, params.cluster_min, params.cluster_max);
  require(!clusters.empty(), ErrorCode::EmptySegmentation, "no cluster within the configured size bounds");

  std::vector<std::size_t> out;
  out.reserve(clusters.front().size());
  for (std::size_t i : clusters.front()) out.push_back(cropped[off_plane[i]]);
  return out;
}

inline PointCloud segment_object(const PointCloud& scene, const SegmentationParams& params, std::uint64_t seed) {
  const auto idx = segment_object_indices(scene, params, seed);
  return scene.select(idx);
}

}  // namespace tactile
