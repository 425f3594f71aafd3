#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "tactile/common.hpp"

namespace tactile {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Points in meters with optional per-point unit normals. `normals` is
/// either empty or the same length as `points`.
struct PointCloud {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_normals() const { return !normals.empty() && normals.size() == points.size(); }

  void reserve(std::size_t n, bool with_normals) {
    points.reserve(n);
    if (with_normals) normals.reserve(n);
  }

  void push_back(const Vec3& p) { points.push_back(p); }
  void push_back(const Vec3& p, const Vec3& n) {
    points.push_back(p);
    normals.push_back(n);
  }

  /// Copy of the point (and normal) at each index, in the given order.
  PointCloud select(std::span<const std::size_t> indices) const {
    PointCloud out;
    out.reserve(indices.size(), has_normals());
    for (std::size_t i : indices) {
      if (has_normals())
        out.push_back(points[i], normals[i]);
      else
        out.push_back(points[i]);
    }
    return out;
  }

  void append(const PointCloud& other) {
    const bool keep_normals = (empty() || has_normals()) && other.has_normals();
    if (!keep_normals) normals.clear();
    points.insert(points.end(), other.points.begin(), other.points.end());
    if (keep_normals) normals.insert(normals.end(), other.normals.begin(), other.normals.end());
  }
};

/// Checks the PointCloud invariants: finite coordinates, unit normals.
inline bool is_valid(const PointCloud& cloud, double normal_tol = 1e-6) {
  if (!cloud.normals.empty() && cloud.normals.size() != cloud.points.size()) return false;
  for (const auto& p : cloud.points)
    if (!p.allFinite()) return false;
  for (const auto& n : cloud.normals)
    if (!n.allFinite() || std::abs(n.norm() - 1.0) > normal_tol) return false;
  return true;
}

inline Vec3 centroid(const PointCloud& cloud) {
  Vec3 sum = Vec3::Zero();
  for (const auto& p : cloud.points) sum += p;
  return cloud.empty() ? sum : Vec3(sum / static_cast<double>(cloud.size()));
}

struct Aabb {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  bool valid() const { return min.allFinite() && max.allFinite() && (min.array() <= max.array()).all(); }

  /// Closed bounds: points on a face are inside.
  bool contains(const Vec3& p) const {
    return p.x() >= min.x() && p.x() <= max.x() && p.y() >= min.y() && p.y() <= max.y() &&
           p.z() >= min.z() && p.z() <= max.z();
  }

  Vec3 extent() const { return max - min; }
  Vec3 center() const { return 0.5 * (min + max); }
};

/// Tight bounding box; a degenerate zero box for empty clouds.
inline Aabb bounding_box(const PointCloud& cloud) {
  if (cloud.empty()) return {};
  Aabb box{cloud.points.front(), cloud.points.front()};
  for (const auto& p : cloud.points) {
    box.min = box.min.cwiseMin(p);
    box.max = box.max.cwiseMax(p);
  }
  return box;
}

/// Rotation + translation mapping p to R p + t.
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static RigidTransform identity() { return {}; }

  static RigidTransform from_translation(const Vec3& t) { return {Mat3::Identity(), t}; }

  static RigidTransform from_axis_angle(const Vec3& axis, double angle_rad, const Vec3& t = Vec3::Zero()) {
    return {Eigen::AngleAxisd(angle_rad, axis.normalized()).toRotationMatrix(), t};
  }

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  Vec3 rotate(const Vec3& v) const { return rotation * v; }

  RigidTransform inverse() const {
    const Mat3 rt = rotation.transpose();
    return {rt, -(rt * translation)};
  }

  /// (a * b)(p) == a(b(p))
  friend RigidTransform operator*(const RigidTransform& a, const RigidTransform& b) {
    return {a.rotation * b.rotation, a.rotation * b.translation + a.translation};
  }

  bool is_valid(double tol = 1e-9) const {
    if (!rotation.allFinite() || !translation.allFinite()) return false;
    const double ortho = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
    return ortho <= tol && std::abs(rotation.determinant() - 1.0) <= tol;
  }
};

/// Geodesic angle between two rotations, in degrees.
inline double rotation_error_deg(const Mat3& a, const Mat3& b) {
  const double c = std::clamp(((a.transpose() * b).trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c) * 180.0 / std::numbers::pi;
}

inline double translation_error(const RigidTransform& a, const RigidTransform& b) {
  return (a.translation - b.translation).norm();
}

/// Re-orthonormalizes a nearly orthonormal matrix (closest rotation).
inline Mat3 orthonormalize(const Mat3& m) {
  Eigen::Quaterniond q(m);
  return q.normalized().toRotationMatrix();
}

/// Every point mapped to R p + t; normals rotated only.
inline PointCloud transform(const PointCloud& cloud, const RigidTransform& pose) {
  PointCloud out;
  out.reserve(cloud.size(), cloud.has_normals());
  for (const auto& p : cloud.points) out.points.push_back(pose.apply(p));
  if (cloud.has_normals())
    for (const auto& n : cloud.normals) out.normals.push_back(pose.rotate(n));
  return out;
}

/// Points inside the closed box, in input order.
inline PointCloud crop_aabb(const PointCloud& cloud, const Aabb& box) {
  require(box.valid(), ErrorCode::InvalidArgument, "crop box has min > max");
  std::vector<std::size_t> keep;
  keep.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i)
    if (box.contains(cloud.points[i])) keep.push_back(i);
  return cloud.select(keep);
}

}  // namespace tactile
