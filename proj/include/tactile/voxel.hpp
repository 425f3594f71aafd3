#pragma once

#include <algorithm>
#include <map>
#include <unordered_map>
#include <vector>

#include "tactile/segmentation.hpp"

namespace tactile {

/// Voxel-grid filter: one output point per occupied voxel of edge `leaf`,
/// placed at the centroid of that voxel's points. Voxels are anchored at the
/// cloud's minimum corner and emitted in lexicographic (ix, iy, iz) order.
/// Normals, when present, are averaged and renormalized.
inline PointCloud voxel_downsample(const PointCloud& cloud, double leaf) {
  require(leaf > 0.0, ErrorCode::InvalidArgument, "voxel leaf must be > 0");
  PointCloud out;
  if (cloud.empty()) return out;

  struct Acc {
    Vec3 sum = Vec3::Zero();
    Vec3 normal = Vec3::Zero();
    std::size_t count = 0;
  };
  const Vec3 origin = bounding_box(cloud).min;
  const bool normals = cloud.has_normals();
  std::unordered_map<CellKey, Acc, CellKeyHash> voxels;
  voxels.reserve(cloud.size() / 2 + 1);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    Acc& acc = voxels[cell_of(cloud.points[i], origin, leaf)];
    acc.sum += cloud.points[i];
    if (normals) acc.normal += cloud.normals[i];
    ++acc.count;
  }

  std::vector<std::pair<CellKey, const Acc*>> ordered;
  ordered.reserve(voxels.size());
  for (const auto& [key, acc] : voxels) ordered.emplace_back(key, &acc);
  std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

  out.reserve(ordered.size(), normals);
  for (const auto& [key, acc] : ordered) {
    out.points.push_back(acc->sum / static_cast<double>(acc->count));
    if (normals) {
      const double len = acc->normal.norm();
      out.normals.push_back(len > 1e-12 ? Vec3(acc->normal / len) : Vec3::UnitZ());
    }
  }
  return out;
}

/// Mean number of points per occupied cubic centimetre, counted on a 1 cm
/// grid anchored at the cloud's minimum corner. This is the density unit
/// (points/cm^3) used throughout the density study.
inline double density_per_cm3(const PointCloud& cloud) {
  if (cloud.empty()) return 0.0;
  constexpr double kCell = 0.01;
  const Vec3 origin = bounding_box(cloud).min;
  std::unordered_map<CellKey, std::size_t, CellKeyHash> cells;
  for (const auto& p : cloud.points) ++cells[cell_of(p, origin, kCell)];
  return static_cast<double>(cloud.size()) / static_cast<double>(cells.size());
}

struct DensityResult {
  PointCloud cloud;
  double leaf = 0.0;
  double achieved = 0.0;  // points/cm^3
};

/// Voxel-downsamples `cloud` with the leaf whose achieved density is closest
/// to `target` (points/cm^3), found by bisection on log(leaf).
inline DensityResult downsample_to_density(const PointCloud& cloud, double target, int iterations = 40) {
  require(target > 0.0, ErrorCode::InvalidArgument, "target density must be > 0");
  require(!cloud.empty(), ErrorCode::InvalidArgument, "cannot downsample an empty cloud");
  const double native = density_per_cm3(cloud);
  DensityResult best{cloud, 0.0, native};
  if (target >= native) return best;

  // Density falls (not strictly) as the leaf grows; 0.1 mm .. 20 cm brackets
  // every target we care about.
  double lo = std::log(1e-4), hi = std::log(0.2);
  for (int it = 0; it < iterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double leaf = std::exp(mid);
    PointCloud reduced = voxel_downsample(cloud, leaf);
    const double achieved = density_per_cm3(reduced);
    if (std::abs(achieved - target) < std::abs(best.achieved - target))
      best = {std::move(reduced), leaf, achieved};
    if (achieved > target)
      lo = mid;
    else
      hi = mid;
  }
  return best;
}

}  // namespace tactile
