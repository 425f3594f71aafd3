#pragma once

#include <array>
#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "tactile/geometry.hpp"

namespace tactile {

/// Tactile sensor dimensions in meters. The contact volume spans
/// pad * x_t by pad * y_t in the sensor plane and [-z_t, y_far] along the
/// sensor normal.
struct SensorGeometry {
  double x_t = 0.02;
  double y_t = 0.02;
  double z_t = 0.002;
  double pad = 1.2;
  double y_far = 0.004;

  bool valid() const { return x_t > 0 && y_t > 0 && z_t > 0 && pad >= 1.0 && y_far > 0; }
  double x_half() const { return 0.5 * pad * x_t; }
  double z_half() const { return 0.5 * pad * y_t; }
};

enum class Finger { left, right };

inline const char* to_string(Finger f) { return f == Finger::left ? "left" : "right"; }

struct FingerContact {
  Finger id = Finger::left;
  RigidTransform pose;  // world -> sensor frame
};

/// Top-down grasp: palm parallel to the table, fingers closing along the
/// horizontal axis (cos yaw, sin yaw, 0). Each sensor frame has y along the
/// finger's approach direction, z vertical and origin on the sensor surface.
struct GraspSample {
  Vec3 position = Vec3::Zero();
  double yaw = 0.0;
  double contact_depth = 0.0;  // indentation under the sensor footprint, m
  std::array<FingerContact, 2> fingers{};

  const RigidTransform& finger_pose(Finger f) const { return fingers[f == Finger::left ? 0 : 1].pose; }
};

struct GraspParams {
  double offset_fraction = 0.4;  // of the bounding box, per axis, centered on the centroid
  double depth_min = 0.2;        // contact depth range as a fraction of z_t
  double depth_max = 0.8;
  double miss_clearance = 0.05;  // m; standoff used when the footprint sees no surface

  bool valid() const {
    return offset_fraction >= 0 && offset_fraction <= 1 && depth_min >= 0 && depth_min <= depth_max &&
           depth_max <= 1;
  }
};

/// World -> sensor transform for a sensor whose surface center is `origin`
/// and whose y axis points along `approach`.
inline RigidTransform sensor_frame(const Vec3& origin, const Vec3& approach) {
  const Vec3 y = approach.normalized();
  const Vec3 z = Vec3::UnitZ();
  const Vec3 x = y.cross(z).normalized();
  Mat3 r;
  r.row(0) = x;
  r.row(1) = y;
  r.row(2) = z;
  return {r, -(r * origin)};
}

/// Random grasp around the cloud centroid. Each finger is advanced along
/// its approach direction until the nearest surface under its (unpadded)
/// footprint sits `contact_depth` inside the sensor surface.
inline GraspSample sample_grasp(const PointCloud& object, const SensorGeometry& geom, const GraspParams& params,
                                std::uint64_t seed) {
  require(!object.empty(), ErrorCode::InvalidArgument, "cannot grasp an empty cloud");
  require(geom.valid(), ErrorCode::InvalidParams, "invalid sensor geometry", {"sensor"});
  require(params.valid(), ErrorCode::InvalidParams, "invalid grasp parameters", {"grasp"});
  Rng rng(seed);
  GraspSample g;
  const Vec3 extent = bounding_box(object).extent();
  g.position = centroid(object);
  for (int a = 0; a < 3; ++a) g.position[a] += params.offset_fraction * extent[a] * rng.uniform(-0.5, 0.5);
  g.yaw = rng.uniform(0.0, std::numbers::pi);
  g.contact_depth = geom.z_t * rng.uniform(params.depth_min, params.depth_max);

  const Vec3 axis(std::cos(g.yaw), std::sin(g.yaw), 0.0);
  for (int f = 0; f < 2; ++f) {
    const Vec3 approach = f == 0 ? axis : Vec3(-axis);
    const Vec3 side = approach.cross(Vec3::UnitZ()).normalized();
    double first = std::numeric_limits<double>::infinity();
    for (const auto& p : object.points) {
      const Vec3 d = p - g.position;
      if (std::abs(d.dot(side)) <= 0.5 * geom.x_t && std::abs(d.z()) <= 0.5 * geom.y_t)
        first = std::min(first, d.dot(approach));
    }
    if (!std::isfinite(first)) first = -(extent.norm() + params.miss_clearance);
    const Vec3 origin = g.position + (first + g.contact_depth) * approach;
    g.fingers[static_cast<std::size_t>(f)] = {f == 0 ? Finger::left : Finger::right, sensor_frame(origin, approach)};
  }
  return g;
}

/// Model points inside the finger's contact volume, in the sensor frame.
inline PointCloud extract_contact_volume(const PointCloud& model, const RigidTransform& finger_pose,
                                         const SensorGeometry& geom) {
  require(geom.valid(), ErrorCode::InvalidParams, "invalid sensor geometry", {"sensor"});
  const Aabb box{Vec3(-geom.x_half(), -geom.z_t, -geom.z_half()), Vec3(geom.x_half(), geom.y_far, geom.z_half())};
  PointCloud out;
  for (const auto& p : model.points) {
    const Vec3 q = finger_pose.apply(p);
    if (box.contains(q)) out.push_back(q);
  }
  require(!out.empty(), ErrorCode::EmptyContact, "no model points inside the contact volume");
  return out;
}

inline PointCloud extract_contact_volume(const PointCloud& model, const GraspSample& grasp, Finger finger,
                                         const SensorGeometry& geom) {
  return extract_contact_volume(model, grasp.finger_pose(finger), geom);
}

// ---------------------------------------------------------------------------
// Depth maps
// ---------------------------------------------------------------------------

/// m x k grid over the sensor x-z plane; rows follow x, columns follow z.
/// Each cell holds the smallest sensor-frame y seen in it (negative means
/// indentation), clamped at -z_t; cells without points hold `fill_value`.
struct DepthMap {
  int m = 0, k = 0;
  double x_lo = 0, x_hi = 0, z_lo = 0, z_hi = 0;
  float fill_value = 0.0f;
  std::vector<float> values;  // row-major

  float at(int i, int j) const { return values[static_cast<std::size_t>(i) * static_cast<std::size_t>(k) + static_cast<std::size_t>(j)]; }
  float& at(int i, int j) { return values[static_cast<std::size_t>(i) * static_cast<std::size_t>(k) + static_cast<std::size_t>(j)]; }
  double bin_dx() const { return (x_hi - x_lo) / m; }
  double bin_dz() const { return (z_hi - z_lo) / k; }
  bool empty_bin(int i, int j) const { return at(i, j) >= fill_value; }
};

inline DepthMap blank_depth_map(const SensorGeometry& geom, int m, int k) {
  require(m >= 1 && k >= 1, ErrorCode::InvalidArgument, "depth map needs at least one bin per axis");
  DepthMap map;
  map.m = m;
  map.k = k;
  map.x_lo = -geom.x_half();
  map.x_hi = geom.x_half();
  map.z_lo = -geom.z_half();
  map.z_hi = geom.z_half();
  map.fill_value = static_cast<float>(geom.y_far);
  map.values.assign(static_cast<std::size_t>(m) * static_cast<std::size_t>(k), map.fill_value);
  return map;
}

/// Bin index of `x` among n equal bins spanning [lo, hi]. Bin i covers
/// [edge(i), edge(i+1)) with edge(i) = lo + (hi - lo) * i / n; the last bin
/// also takes hi. Returns -1 outside.
inline int bin_index(double x, double lo, double hi, int n) {
  if (!(x >= lo && x <= hi)) return -1;
  const double span = hi - lo;
  auto edge = [&](int i) { return lo + span * i / n; };
  int i = std::clamp(static_cast<int>(std::floor((x - lo) / span * n)), 0, n - 1);
  while (i > 0 && x < edge(i)) --i;
  while (i < n - 1 && x >= edge(i + 1)) ++i;
  return i;
}

inline DepthMap bin_depth_map(const PointCloud& patch, const SensorGeometry& geom, int m = 100, int k = 100) {
  require(geom.valid(), ErrorCode::InvalidParams, "invalid sensor geometry", {"sensor"});
  DepthMap map = blank_depth_map(geom, m, k);
  const double floor_y = -geom.z_t;
  for (const auto& p : patch.points) {
    const int i = bin_index(p.x(), map.x_lo, map.x_hi, m);
    const int j = bin_index(p.z(), map.z_lo, map.z_hi, k);
    if (i < 0 || j < 0) continue;
    const auto v = static_cast<float>(std::max(p.y(), floor_y));
    float& cell = map.at(i, j);
    cell = std::min(cell, v);
  }
  return map;
}

/// Fills each empty bin lying within `max_gap` meters of an occupied bin
/// with a Gaussian-weighted local linear fit (sigma = max_gap / 2) over the
/// occupied bins inside that radius. Ill-conditioned fits fall back to the
/// weighted mean; results are clamped to [lowest sample, fill value].
/// Occupied bins are left untouched and bins farther than `max_gap` from
/// any sample keep the fill value.
inline DepthMap fill_empty_bins(const DepthMap& map, double max_gap) {
  DepthMap out = map;
  if (!(max_gap > 0)) return out;
  const double dx = map.bin_dx(), dz = map.bin_dz();
  std::vector<std::array<double, 3>> occupied;  // (row, col, value)
  for (int i = 0; i < map.m; ++i)
    for (int j = 0; j < map.k; ++j)
      if (map.at(i, j) < map.fill_value) occupied.push_back({double(i), double(j), double(map.at(i, j))});
  if (occupied.empty()) return out;

  const int ri = static_cast<int>(std::floor(max_gap / dx)), rj = static_cast<int>(std::floor(max_gap / dz));
  const bool scan_all = occupied.size() < static_cast<std::size_t>(2 * ri + 1) * static_cast<std::size_t>(2 * rj + 1);
  const double r2 = max_gap * max_gap, inv_two_sigma2 = 2.0 / r2;
  double lowest = std::numeric_limits<double>::infinity();
  for (const auto& s : occupied) lowest = std::min(lowest, s[2]);

  for (int i = 0; i < map.m; ++i)
    for (int j = 0; j < map.k; ++j) {
      if (map.at(i, j) < map.fill_value) continue;
      Mat3 a = Mat3::Zero();
      Vec3 b = Vec3::Zero();
      auto add = [&](double si, double sj, double v) {
        const double ux = (si - i) * dx, uz = (sj - j) * dz;
        const double d2 = ux * ux + uz * uz;
        if (d2 > r2) return;
        const double w = std::exp(-d2 * inv_two_sigma2);
        const Vec3 basis(1.0, ux / max_gap, uz / max_gap);
        a += w * basis * basis.transpose();
        b += w * v * basis;
      };
      if (scan_all) {
        for (const auto& s : occupied) add(s[0], s[1], s[2]);
      } else {
        for (int si = std::max(0, i - ri); si <= std::min(map.m - 1, i + ri); ++si)
          for (int sj = std::max(0, j - rj); sj <= std::min(map.k - 1, j + rj); ++sj)
            if (map.at(si, sj) < map.fill_value) add(si, sj, map.at(si, sj));
      }
      if (a(0, 0) <= 0) continue;
      double v = b[0] / a(0, 0);
      const Eigen::SelfAdjointEigenSolver<Mat3> eig(a);
      const auto ev = eig.eigenvalues();
      if (ev[0] > 1e-6 * ev[2]) v = a.ldlt().solve(b)[0];
      out.at(i, j) = std::min(map.fill_value, static_cast<float>(std::max(v, lowest)));
    }
  return out;
}

/// Depth map as fed to the estimator: bin the patch, then close sampling
/// gaps up to `max_gap`.
inline DepthMap generate_depth(const PointCloud& patch, const SensorGeometry& geom, int m, int k, double max_gap) {
  return fill_empty_bins(bin_depth_map(patch, geom, m, k), max_gap);
}

// ---------------------------------------------------------------------------
// Depth-map files: raw little-endian float32, row-major, plus a JSON sidecar.
// ---------------------------------------------------------------------------

inline nlohmann::json depth_sidecar(const DepthMap& map) {
  return {{"m", map.m},
          {"k", map.k},
          {"x_extent", {map.x_lo, map.x_hi}},
          {"z_extent", {map.z_lo, map.z_hi}},
          {"fill_value", map.fill_value},
          {"units", "m"}};
}

inline void write_depth_map(const std::filesystem::path& f32_path, const DepthMap& map) {
  std::vector<char> bytes(map.values.size() * 4);
  for (std::size_t i = 0; i < map.values.size(); ++i) {
    auto bits = std::bit_cast<std::uint32_t>(map.values[i]);
    for (int b = 0; b < 4; ++b) bytes[i * 4 + static_cast<std::size_t>(b)] = static_cast<char>((bits >> (8 * b)) & 0xFF);
  }
  {
    std::ofstream out(f32_path, std::ios::binary);
    require(static_cast<bool>(out), ErrorCode::Io, "cannot write " + f32_path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  auto sidecar = f32_path;
  sidecar.replace_extension(".json");
  std::ofstream js(sidecar, std::ios::binary);
  require(static_cast<bool>(js), ErrorCode::Io, "cannot write " + sidecar.string());
  js << depth_sidecar(map).dump(2) << '\n';
}

inline DepthMap read_depth_map(const std::filesystem::path& f32_path) {
  auto sidecar = f32_path;
  sidecar.replace_extension(".json");
  std::ifstream js(sidecar);
  require(static_cast<bool>(js), ErrorCode::MissingFile, "missing depth sidecar " + sidecar.string(),
          {sidecar.string()});
  DepthMap map;
  try {
    const auto j = nlohmann::json::parse(js);
    map.m = j.at("m").get<int>();
    map.k = j.at("k").get<int>();
    const auto xe = j.at("x_extent").get<std::vector<double>>();
    const auto ze = j.at("z_extent").get<std::vector<double>>();
    require(xe.size() == 2 && ze.size() == 2, ErrorCode::Parse, "extent needs [lo, hi]");
    map.x_lo = xe[0];
    map.x_hi = xe[1];
    map.z_lo = ze[0];
    map.z_hi = ze[1];
    map.fill_value = j.at("fill_value").get<float>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, "bad depth sidecar " + sidecar.string() + ": " + e.what());
  }
  require(map.m >= 1 && map.k >= 1, ErrorCode::Parse, "depth sidecar has empty dimensions");
  std::ifstream in(f32_path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::MissingFile, "missing depth map " + f32_path.string(),
          {f32_path.string()});
  const std::size_t n = static_cast<std::size_t>(map.m) * static_cast<std::size_t>(map.k);
  std::vector<unsigned char> bytes(n * 4);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  require(static_cast<std::size_t>(in.gcount()) == bytes.size(), ErrorCode::Parse,
          "depth map " + f32_path.string() + " is shorter than m*k floats");
  map.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(bytes[i * 4 + static_cast<std::size_t>(b)]) << (8 * b);
    map.values[i] = std::bit_cast<float>(bits);
  }
  return map;
}

}  // namespace tactile
