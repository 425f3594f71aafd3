#pragma once

#include <array>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "tactile/registration.hpp"
#include "tactile/voxel.hpp"

namespace tactile {

// ===========================================================================
// Parametric test objects
// ===========================================================================

enum class ObjectKind { ridged_box, bumpy_cylinder, embossed_plate };

inline const char* to_string(ObjectKind kind) {
  switch (kind) {
    case ObjectKind::ridged_box: return "ridged_box";
    case ObjectKind::bumpy_cylinder: return "bumpy_cylinder";
    case ObjectKind::embossed_plate: return "embossed_plate";
  }
  return "?";
}

inline ObjectKind object_kind_from_string(const std::string& s) {
  if (s == "ridged_box") return ObjectKind::ridged_box;
  if (s == "bumpy_cylinder") return ObjectKind::bumpy_cylinder;
  if (s == "embossed_plate") return ObjectKind::embossed_plate;
  throw Error(ErrorCode::InvalidParams, "unknown object kind '" + s + "'", {"kind"});
}

/// Shape parameters, all lengths in meters. The main body is
/// `size` (x, y, z) for the box kinds and radius x height for the cylinder.
/// Every kind carries an off-center tab so that the object has no rigid
/// self-symmetry.
struct ObjectParams {
  Vec3 size = Vec3(0.07, 0.05, 0.09);
  double radius = 0.035;
  double feature_amplitude = 0.001;
  double feature_period = 0.006;
  int bump_count = 40;
  double feature_margin = 0.005;  // features fade out this close to face edges
  double spacing = 0.0004;        // surface sample pitch
  double jitter = 0.3;            // fraction of the pitch
  double elastomer_depth = 0.002; // features deeper than this cannot be sensed
  bool tab = true;
};

inline ObjectParams default_params(ObjectKind kind) {
  ObjectParams p;
  switch (kind) {
    case ObjectKind::ridged_box:
      p.size = Vec3(0.07, 0.05, 0.09);
      p.feature_amplitude = 0.001;
      p.feature_period = 0.008;
      break;
    case ObjectKind::bumpy_cylinder:
      p.radius = 0.035;
      p.size = Vec3(0.07, 0.07, 0.10);
      p.feature_amplitude = 0.0015;
      p.feature_period = 0.012;
      p.bump_count = 40;
      break;
    case ObjectKind::embossed_plate:
      p.size = Vec3(0.12, 0.09, 0.025);
      p.feature_amplitude = 0.001;
      p.feature_period = 0.008;
      break;
  }
  return p;
}

/// Largest density (points/cm^3) the downstream density study asks for; a
/// generated model must be at least this dense.
inline constexpr double kMaxStudyDensity = 80.0;

namespace detail {

inline double smooth_ramp(double d, double margin) {
  if (margin <= 0) return d >= 0 ? 1.0 : 0.0;
  const double t = std::clamp(d / margin, 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

}  // namespace detail

/// Normal displacement pattern on one face, as a function of the two in-face
/// coordinates (u, v) measured from the face center.
struct FacePattern {
  enum class Type { flat, ridges, emboss } type = Type::flat;
  double amplitude = 0.0;
  double period = 0.01;
  double margin = 0.005;
  double half_u = 0.0, half_v = 0.0;

  /// Unwindowed relief in [0, 1].
  double relief(double u, double v) const {
    const double w = 2.0 * std::numbers::pi / period;
    switch (type) {
      case Type::flat: return 0.0;
      case Type::ridges: return 0.5 * (1.0 - std::cos(w * v));
      case Type::emboss: return std::max(0.0, std::sin(w * u) * std::sin(w * v));
    }
    return 0.0;
  }

  double window(double u, double v) const {
    return detail::smooth_ramp(half_u - std::abs(u), margin) * detail::smooth_ramp(half_v - std::abs(v), margin);
  }

  double operator()(double u, double v) const {
    if (type == Type::flat || amplitude == 0.0) return 0.0;
    return amplitude * relief(u, v) * window(u, v);
  }
};

/// Axis-aligned box with per-face outward displacement. Faces are ordered
/// +x, -x, +y, -y, +z, -z; the in-face axes are the remaining two in
/// increasing order.
struct BoxPrimitive {
  Vec3 center = Vec3::Zero();
  Vec3 half = Vec3::Constant(0.01);
  std::array<FacePattern, 6> faces{};

  static constexpr std::array<std::array<int, 3>, 3> kAxes{{{0, 1, 2}, {1, 0, 2}, {2, 0, 1}}};

  double face_term(int f, const Vec3& p) const {
    const int a = kAxes[f / 2][0], b = kAxes[f / 2][1], c = kAxes[f / 2][2];
    const double s = (f % 2 == 0) ? 1.0 : -1.0;
    const Vec3 d = p - center;
    return s * d[a] - (half[a] + faces[f](d[b], d[c]));
  }

  /// Zero on the surface, negative inside.
  double implicit(const Vec3& p) const {
    double f = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < 6; ++i) f = std::max(f, face_term(i, p));
    return f;
  }

  template <typename Emit>
  void sample(double spacing, double jitter, Rng& rng, Emit&& emit) const {
    for (int f = 0; f < 6; ++f) {
      const int a = kAxes[f / 2][0], b = kAxes[f / 2][1], c = kAxes[f / 2][2];
      const double s = (f % 2 == 0) ? 1.0 : -1.0;
      const auto nu = static_cast<int>(std::ceil(2.0 * half[b] / spacing));
      const auto nv = static_cast<int>(std::ceil(2.0 * half[c] / spacing));
      const double du = 2.0 * half[b] / nu, dv = 2.0 * half[c] / nv;
      const FacePattern& pat = faces[f];
      for (int i = 0; i < nu; ++i)
        for (int j = 0; j < nv; ++j) {
          const double u = -half[b] + (i + 0.5 + jitter * (rng.uniform() - 0.5)) * du;
          const double v = -half[c] + (j + 0.5 + jitter * (rng.uniform() - 0.5)) * dv;
          Vec3 p = center;
          p[a] += s * (half[a] + pat(u, v));
          p[b] += u;
          p[c] += v;
          constexpr double h = 1e-7;
          const double gu = (pat(u + h, v) - pat(u - h, v)) / (2 * h);
          const double gv = (pat(u, v + h) - pat(u, v - h)) / (2 * h);
          Vec3 n = Vec3::Zero();
          n[a] = s;
          n[b] = -gu;
          n[c] = -gv;
          emit(p, Vec3(n.normalized()));
        }
    }
  }
};

/// Vertical cylinder (axis +z) with raised cosine bumps on the lateral face.
struct CylinderPrimitive {
  Vec3 base = Vec3::Zero();  // center of the bottom cap
  double radius = 0.03;
  double height = 0.1;
  double bump_amplitude = 0.0;
  double bump_radius = 0.005;  // on the unrolled lateral surface
  std::vector<std::array<double, 2>> bumps;  // (theta, z) centers

  double relief(double theta, double z) const {
    double d = 0.0;
    for (const auto& bump : bumps) {
      double dt = std::remainder(theta - bump[0], 2.0 * std::numbers::pi);
      const double ds = radius * dt, dz = z - bump[1];
      const double r = std::sqrt(ds * ds + dz * dz) / bump_radius;
      if (r < 1.0) d += 0.5 * (1.0 + std::cos(std::numbers::pi * r));
    }
    return bump_amplitude * d;
  }

  double implicit(const Vec3& p) const {
    const Vec3 d = p - base;
    const double rho = std::hypot(d.x(), d.y());
    const double theta = std::atan2(d.y(), d.x());
    return std::max({rho - radius - relief(theta, d.z()), d.z() - height, -d.z()});
  }

  template <typename Emit>
  void sample(double spacing, double jitter, Rng& rng, Emit&& emit) const {
    const double circumference = 2.0 * std::numbers::pi * radius;
    const auto ns = static_cast<int>(std::ceil(circumference / spacing));
    const auto nz = static_cast<int>(std::ceil(height / spacing));
    const double dth = 2.0 * std::numbers::pi / ns, dz = height / nz;
    for (int i = 0; i < ns; ++i)
      for (int j = 0; j < nz; ++j) {
        const double th = -std::numbers::pi + (i + 0.5 + jitter * (rng.uniform() - 0.5)) * dth;
        const double z = (j + 0.5 + jitter * (rng.uniform() - 0.5)) * dz;
        const double rho = radius + relief(th, z);
        const Vec3 radial(std::cos(th), std::sin(th), 0.0);
        const Vec3 tangent(-std::sin(th), std::cos(th), 0.0);
        constexpr double h = 1e-7;
        const double gs = (relief(th + h / radius, z) - relief(th - h / radius, z)) / (2 * h);
        const double gz = (relief(th, z + h) - relief(th, z - h)) / (2 * h);
        const Vec3 n = (radial - gs * tangent - gz * Vec3::UnitZ()).normalized();
        emit(Vec3(base + rho * radial + Vec3(0, 0, z)), n);
      }
    // Caps on a square grid clipped to the disk.
    const auto nc = static_cast<int>(std::ceil(2.0 * radius / spacing));
    const double dc = 2.0 * radius / nc;
    for (int cap = 0; cap < 2; ++cap)
      for (int i = 0; i < nc; ++i)
        for (int j = 0; j < nc; ++j) {
          const double x = -radius + (i + 0.5 + jitter * (rng.uniform() - 0.5)) * dc;
          const double y = -radius + (j + 0.5 + jitter * (rng.uniform() - 0.5)) * dc;
          if (x * x + y * y > radius * radius) continue;
          emit(Vec3(base + Vec3(x, y, cap == 0 ? height : 0.0)), Vec3(0, 0, cap == 0 ? 1.0 : -1.0));
        }
  }
};

using Primitive = std::variant<BoxPrimitive, CylinderPrimitive>;

/// Union of primitives. The implicit function is the minimum over parts:
/// negative inside, zero on the surface.
struct Shape {
  std::vector<Primitive> parts;

  double implicit(const Vec3& p) const {
    double f = std::numeric_limits<double>::infinity();
    for (const auto& part : parts) f = std::min(f, std::visit([&](const auto& s) { return s.implicit(p); }, part));
    return f;
  }
};

struct SyntheticObject {
  ObjectKind kind = ObjectKind::ridged_box;
  ObjectParams params;
  std::uint64_t seed = 0;
  Shape shape;
  PointCloud cloud;                      // object frame, outward normals
  RigidTransform pose;                   // object -> world ground truth

  /// Analytic surface function in the object frame (0 on the surface).
  double implicit(const Vec3& p_object) const { return shape.implicit(p_object); }
};

inline void validate(const ObjectParams& p, ObjectKind kind) {
  auto check = [](bool ok, const char* field, const std::string& what) {
    require(ok, ErrorCode::InvalidParams, std::string(field) + " " + what, {field});
  };
  check(p.size.allFinite() && (p.size.array() > 0).all(), "size", "must be positive");
  check(p.size.maxCoeff() <= 0.5, "size", "must be at most 0.5 m per axis");
  if (kind == ObjectKind::bumpy_cylinder) check(p.radius > 0 && p.radius <= 0.25, "radius", "must be in (0, 0.25] m");
  check(p.elastomer_depth > 0, "elastomer_depth", "must be > 0");
  check(p.feature_amplitude >= 0 && p.feature_amplitude <= p.elastomer_depth, "feature_amplitude",
        "must be in [0, elastomer_depth]");
  check(p.feature_period > 0 && p.feature_period <= 0.05, "feature_period", "must be in (0, 0.05] m");
  check(p.feature_margin >= 0, "feature_margin", "must be >= 0");
  check(p.bump_count >= 0 && p.bump_count <= 500, "bump_count", "must be in [0, 500]");
  check(p.spacing > 0 && p.spacing <= 0.01, "spacing", "must be in (0, 0.01] m");
  check(p.jitter >= 0 && p.jitter <= 1, "jitter", "must be in [0, 1]");
}

inline Shape build_shape(ObjectKind kind, const ObjectParams& p, std::uint64_t seed) {
  Shape shape;
  auto box = [](Vec3 lo, Vec3 hi) {
    BoxPrimitive b;
    b.center = 0.5 * (lo + hi);
    b.half = 0.5 * (hi - lo);
    return b;
  };
  auto pattern = [&](FacePattern::Type type, const BoxPrimitive& b, int face) {
    FacePattern f;
    f.type = type;
    f.amplitude = p.feature_amplitude;
    f.period = p.feature_period;
    f.margin = p.feature_margin;
    f.half_u = b.half[BoxPrimitive::kAxes[face / 2][1]];
    f.half_v = b.half[BoxPrimitive::kAxes[face / 2][2]];
    return f;
  };
  const Vec3 s = p.size;
  switch (kind) {
    case ObjectKind::ridged_box: {
      BoxPrimitive body = box(Vec3(-s.x() / 2, -s.y() / 2, 0), Vec3(s.x() / 2, s.y() / 2, s.z()));
      body.faces[0] = pattern(FacePattern::Type::ridges, body, 0);
      body.faces[2] = pattern(FacePattern::Type::ridges, body, 2);
      shape.parts.emplace_back(body);
      if (p.tab)
        shape.parts.emplace_back(box(Vec3(-s.x() / 2 - 0.015, -0.005, 0.5 * s.z()),
                                     Vec3(-s.x() / 2 + 0.005, 0.025 * s.y() / 0.05, 0.5 * s.z() + 0.03)));
      break;
    }
    case ObjectKind::bumpy_cylinder: {
      CylinderPrimitive cyl;
      cyl.radius = p.radius;
      cyl.height = s.z();
      cyl.bump_amplitude = p.feature_amplitude;
      cyl.bump_radius = 0.5 * p.feature_period;
      Rng rng(derive_seed(seed, 0xB0B5));
      const double zlo = p.feature_margin + cyl.bump_radius, zhi = s.z() - p.feature_margin - cyl.bump_radius;
      for (int i = 0; i < p.bump_count && zhi > zlo; ++i)
        cyl.bumps.push_back({rng.uniform(-std::numbers::pi, std::numbers::pi), rng.uniform(zlo, zhi)});
      shape.parts.emplace_back(std::move(cyl));
      if (p.tab)
        shape.parts.emplace_back(box(Vec3(p.radius - 0.006, -0.006, 0.45 * s.z()),
                                     Vec3(p.radius + 0.02, 0.006, 0.95 * s.z())));
      break;
    }
    case ObjectKind::embossed_plate: {
      BoxPrimitive body = box(Vec3(-s.x() / 2, -s.y() / 2, 0), Vec3(s.x() / 2, s.y() / 2, s.z()));
      body.faces[4] = pattern(FacePattern::Type::emboss, body, 4);
      shape.parts.emplace_back(body);
      if (p.tab)
        shape.parts.emplace_back(box(Vec3(s.x() / 2 - 0.03, -s.y() / 2, 0.5 * s.z()),
                                     Vec3(s.x() / 2, -s.y() / 2 + 0.025, s.z() + 0.02)));
      break;
    }
  }
  return shape;
}

/// Builds a dense, deterministic surface sampling of the requested object.
/// Samples of one part that fall strictly inside another part are dropped,
/// so the cloud covers exactly the union's outer surface.
inline SyntheticObject make_object(ObjectKind kind, const ObjectParams& params, std::uint64_t seed) {
  validate(params, kind);
  SyntheticObject obj;
  obj.kind = kind;
  obj.params = params;
  obj.seed = seed;
  obj.shape = build_shape(kind, params, seed);

  Rng rng(derive_seed(seed, 0x5A3B1E));
  const auto& parts = obj.shape.parts;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    auto emit = [&](const Vec3& p, const Vec3& n) {
      for (std::size_t j = 0; j < parts.size(); ++j) {
        if (j == i) continue;
        if (std::visit([&](const auto& s) { return s.implicit(p); }, parts[j]) < -1e-9) return;
      }
      obj.cloud.push_back(p, n);
    };
    std::visit([&](const auto& s) { s.sample(params.spacing, params.jitter, rng, emit); }, parts[i]);
  }
  require(density_per_cm3(obj.cloud) >= kMaxStudyDensity, ErrorCode::InvalidParams,
          "spacing too coarse: model density below the study maximum", {"spacing"});
  return obj;
}

inline SyntheticObject make_object(ObjectKind kind, std::uint64_t seed) {
  return make_object(kind, default_params(kind), seed);
}

// ===========================================================================
// Scenes and the depth camera
// ===========================================================================

struct TableParams {
  double size_x = 0.6;
  double size_y = 0.6;
  double spacing = 0.002;
};

struct Scene {
  PointCloud table;         // world frame, plane z = 0
  SyntheticObject object;   // carries the ground-truth pose
  PointCloud object_world;  // transform(object.cloud, object.pose)

  PointCloud cloud() const {
    PointCloud all = table;
    all.append(object_world);
    return all;
  }
};

/// Places `object` on a table plane (z = 0) at `pose`.
inline Scene compose_scene(const SyntheticObject& object, const TableParams& table, const RigidTransform& pose) {
  require(pose.is_valid(1e-9), ErrorCode::InvalidParams, "object pose is not a rigid transform", {"pose"});
  require(table.size_x > 0 && table.size_y > 0 && table.spacing > 0, ErrorCode::InvalidParams,
          "table extent and spacing must be positive", {"table"});
  Scene scene;
  scene.object = object;
  scene.object.pose = pose;
  scene.object_world = transform(object.cloud, pose);
  for (const auto& p : scene.object_world.points)
    require(p.z() >= -1e-9, ErrorCode::InvalidParams, "object pose puts points below the table", {"pose"});

  const auto nx = static_cast<int>(std::ceil(table.size_x / table.spacing));
  const auto ny = static_cast<int>(std::ceil(table.size_y / table.spacing));
  scene.table.reserve(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny), true);
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j)
      scene.table.push_back(Vec3(-table.size_x / 2 + (i + 0.5) * table.spacing,
                                 -table.size_y / 2 + (j + 0.5) * table.spacing, 0.0),
                            Vec3::UnitZ());
  return scene;
}

/// Object resting on the table, rotated `yaw` about the vertical and
/// shifted in the table plane.
inline RigidTransform resting_pose(double yaw, double x = 0.0, double y = 0.0) {
  return RigidTransform::from_axis_angle(Vec3::UnitZ(), yaw, Vec3(x, y, 0.0));
}

/// Pinhole depth camera. `pose` maps camera coordinates (x right, y down,
/// z forward) to world coordinates.
struct DepthCamera {
  RigidTransform pose;
  double fx = 365.0, fy = 365.0, cx = 256.0, cy = 212.0;
  int width = 512, height = 424;
  double noise_sigma = 0.0015;
  double near_clip = 0.05;

  bool valid() const { return fx > 0 && fy > 0 && width > 0 && height > 0 && noise_sigma >= 0 && pose.is_valid(1e-9); }
};

inline RigidTransform look_at(const Vec3& eye, const Vec3& target, const Vec3& up = Vec3::UnitZ()) {
  const Vec3 z = (target - eye).normalized();
  Vec3 x = z.cross(up);
  if (x.norm() < 1e-9) x = z.cross(Vec3::UnitX());
  x.normalize();
  const Vec3 y = z.cross(x);
  Mat3 r;
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = z;
  return {r, eye};
}

struct CameraRigParams {
  double range = 1.0;          // m from the target
  double azimuth_deg = 45.0;   // cameras at +/- this angle about the vertical
  double elevation_deg = 45.0;
  Vec3 target = Vec3(0, 0, 0.04);
  double noise_sigma = 0.0015;
};

/// Two cameras at +/- azimuth looking at the target, Kinect-v2-like optics.
inline std::vector<DepthCamera> default_rig(const CameraRigParams& rig = {}) {
  std::vector<DepthCamera> cams;
  const double el = rig.elevation_deg * std::numbers::pi / 180.0;
  for (double sign : {-1.0, 1.0}) {
    const double az = sign * rig.azimuth_deg * std::numbers::pi / 180.0 - std::numbers::pi / 2.0;
    const Vec3 dir(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
    DepthCamera cam;
    cam.pose = look_at(rig.target + rig.range * dir, rig.target);
    cam.noise_sigma = rig.noise_sigma;
    cams.push_back(cam);
  }
  return cams;
}

struct LabeledCloud {
  PointCloud cloud;
  std::vector<std::uint8_t> labels;  // 0 table, 1 object
};

/// Z-buffer projection of the scene's table and object clouds. Each pixel
/// keeps its nearest point; that point is then perturbed along its viewing
/// ray by Gaussian depth noise and reported in world coordinates, in raster
/// order.
inline LabeledCloud render_labeled_view(const Scene& scene, const DepthCamera& cam, std::uint64_t seed) {
  require(cam.valid(), ErrorCode::InvalidParams, "invalid depth camera", {"camera"});
  const RigidTransform world_to_cam = cam.pose.inverse();
  const std::size_t pixels = static_cast<std::size_t>(cam.width) * static_cast<std::size_t>(cam.height);
  std::vector<double> depth(pixels, std::numeric_limits<double>::infinity());
  std::vector<Vec3> hit(pixels);
  std::vector<std::uint8_t> label(pixels, 0);

  auto splat = [&](const PointCloud& cloud, std::uint8_t tag) {
    for (const auto& pw : cloud.points) {
      const Vec3 pc = world_to_cam.apply(pw);
      if (pc.z() <= cam.near_clip) continue;
      const double u = cam.fx * pc.x() / pc.z() + cam.cx;
      const double v = cam.fy * pc.y() / pc.z() + cam.cy;
      const auto ui = static_cast<long>(std::floor(u + 0.5));
      const auto vi = static_cast<long>(std::floor(v + 0.5));
      if (ui < 0 || vi < 0 || ui >= cam.width || vi >= cam.height) continue;
      const std::size_t k = static_cast<std::size_t>(vi) * static_cast<std::size_t>(cam.width) + static_cast<std::size_t>(ui);
      if (pc.z() < depth[k]) {
        depth[k] = pc.z();
        hit[k] = pc;
        label[k] = tag;
      }
    }
  };
  splat(scene.table, 0);
  splat(scene.object_world, 1);

  LabeledCloud out;
  Rng rng(seed);
  for (std::size_t k = 0; k < pixels; ++k) {
    if (!std::isfinite(depth[k])) continue;
    const double z = depth[k];
    const double noisy = z + cam.noise_sigma * rng.normal();
    out.cloud.push_back(cam.pose.apply(hit[k] * (noisy / z)));
    out.labels.push_back(label[k]);
  }
  return out;
}

inline PointCloud render_depth_view(const Scene& scene, const DepthCamera& cam, std::uint64_t seed) {
  return render_labeled_view(scene, cam, seed).cloud;
}

/// Concatenated views, each with its own derived noise seed.
inline LabeledCloud render_views(const Scene& scene, std::span<const DepthCamera> cams, std::uint64_t seed) {
  LabeledCloud all;
  for (std::size_t i = 0; i < cams.size(); ++i) {
    LabeledCloud v = render_labeled_view(scene, cams[i], derive_seed(seed, i));
    all.cloud.append(v.cloud);
    all.labels.insert(all.labels.end(), v.labels.begin(), v.labels.end());
  }
  return all;
}

// ===========================================================================
// JSON sidecars
// ===========================================================================

inline nlohmann::json params_to_json(const ObjectParams& p) {
  return {{"size_m", {p.size.x(), p.size.y(), p.size.z()}},
          {"radius_m", p.radius},
          {"feature_amplitude_m", p.feature_amplitude},
          {"feature_period_m", p.feature_period},
          {"bump_count", p.bump_count},
          {"feature_margin_m", p.feature_margin},
          {"spacing_m", p.spacing},
          {"jitter", p.jitter},
          {"elastomer_depth_m", p.elastomer_depth},
          {"tab", p.tab}};
}

inline ObjectParams params_from_json(const nlohmann::json& j, ObjectParams p = {}) {
  try {
    if (j.contains("size_m")) {
      const auto s = j.at("size_m").get<std::vector<double>>();
      require(s.size() == 3, ErrorCode::InvalidParams, "size_m needs 3 values", {"size"});
      p.size = Vec3(s[0], s[1], s[2]);
    }
    p.radius = j.value("radius_m", p.radius);
    p.feature_amplitude = j.value("feature_amplitude_m", p.feature_amplitude);
    p.feature_period = j.value("feature_period_m", p.feature_period);
    p.bump_count = j.value("bump_count", p.bump_count);
    p.feature_margin = j.value("feature_margin_m", p.feature_margin);
    p.spacing = j.value("spacing_m", p.spacing);
    p.jitter = j.value("jitter", p.jitter);
    p.elastomer_depth = j.value("elastomer_depth_m", p.elastomer_depth);
    p.tab = j.value("tab", p.tab);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidParams, std::string("bad object params: ") + e.what());
  }
  return p;
}

inline nlohmann::json object_sidecar(const SyntheticObject& obj) {
  return {{"kind", to_string(obj.kind)},
          {"params", params_to_json(obj.params)},
          {"seed", obj.seed},
          {"pose", pose_to_json(obj.pose)},
          {"points", obj.cloud.size()}};
}

inline nlohmann::json camera_to_json(const DepthCamera& c) {
  return {{"pose", pose_to_json(c.pose)}, {"fx", c.fx}, {"fy", c.fy}, {"cx", c.cx}, {"cy", c.cy},
          {"width", c.width}, {"height", c.height}, {"noise_sigma_m", c.noise_sigma}};
}

}  // namespace tactile
