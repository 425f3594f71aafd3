#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tactile/contact.hpp"
#include "tactile/image.hpp"
#include "tactile/registration.hpp"
#include "tactile/segmentation.hpp"
#include "tactile/synth.hpp"
#include "tactile/tactile_render.hpp"
#include "tactile/voxel.hpp"

namespace tactile {

inline constexpr int kManifestSchemaVersion = 1;

enum class Split { train, val, test, unassigned };

inline const char* to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
    case Split::unassigned: return "unassigned";
  }
  return "?";
}

inline Split split_from_string(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "val") return Split::val;
  if (s == "test") return Split::test;
  if (s == "unassigned") return Split::unassigned;
  throw Error(ErrorCode::Parse, "unknown split '" + s + "'");
}

/// One (depth map, tactile image) pair. Paths are relative to the directory
/// holding manifest.json.
struct PairRecord {
  std::string id;
  std::string depth_path;
  std::string tactile_path;
  std::string object_id;
  int grasp_index = 0;
  Vec3 position = Vec3::Zero();  // grasp center, world frame, m
  double yaw = 0.0;              // rad
  double contact_depth = 0.0;    // m
  Finger finger = Finger::left;
  Split split = Split::unassigned;

  bool operator==(const PairRecord&) const = default;
};

struct PairManifest {
  int schema_version = kManifestSchemaVersion;
  std::vector<PairRecord> records;
  std::array<double, 3> ratios{0.70, 0.15, 0.15};  // train, val, test
  std::uint64_t split_seed = 0;
  int m = 100, k = 100;

  bool operator==(const PairManifest&) const = default;

  std::vector<const PairRecord*> in_split(Split s) const {
    std::vector<const PairRecord*> out;
    for (const auto& r : records)
      if (r.split == s) out.push_back(&r);
    return out;
  }
};

inline std::string grasp_id(const std::string& object_id, int grasp) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "-g%04d", grasp);
  return object_id + buf;
}

/// "<object>-g<grasp, 4 digits>-<L|R>", e.g. obj0-g0003-L.
inline std::string record_id(const std::string& object_id, int grasp, Finger finger) {
  return grasp_id(object_id, grasp) + (finger == Finger::left ? "-L" : "-R");
}

inline bool valid_ratios(const std::array<double, 3>& r) {
  for (double v : r)
    if (!(v >= 0.0 && v <= 1.0)) return false;
  return std::abs(r[0] + r[1] + r[2] - 1.0) <= 1e-9;
}

// ---------------------------------------------------------------------------
// Manifest JSON
// ---------------------------------------------------------------------------

inline nlohmann::json record_to_json(const PairRecord& r) {
  return {{"id", r.id},
          {"depth", r.depth_path},
          {"tactile", r.tactile_path},
          {"object_id", r.object_id},
          {"grasp",
           {{"index", r.grasp_index},
            {"position_m", {r.position.x(), r.position.y(), r.position.z()}},
            {"yaw_rad", r.yaw},
            {"contact_depth_m", r.contact_depth}}},
          {"finger", to_string(r.finger)},
          {"split", to_string(r.split)}};
}

inline PairRecord record_from_json(const nlohmann::json& j) {
  PairRecord r;
  r.id = j.at("id").get<std::string>();
  r.depth_path = j.at("depth").get<std::string>();
  r.tactile_path = j.at("tactile").get<std::string>();
  r.object_id = j.value("object_id", std::string{});
  if (j.contains("grasp")) {
    const auto& g = j.at("grasp");
    r.grasp_index = g.value("index", 0);
    if (g.contains("position_m")) {
      const auto p = g.at("position_m").get<std::vector<double>>();
      require(p.size() == 3, ErrorCode::Parse, "grasp position needs 3 values", {r.id});
      r.position = Vec3(p[0], p[1], p[2]);
    }
    r.yaw = g.value("yaw_rad", 0.0);
    r.contact_depth = g.value("contact_depth_m", 0.0);
  }
  const std::string finger = j.value("finger", std::string("left"));
  require(finger == "left" || finger == "right", ErrorCode::Parse, "unknown finger '" + finger + "'", {r.id});
  r.finger = finger == "left" ? Finger::left : Finger::right;
  r.split = split_from_string(j.value("split", std::string("unassigned")));
  return r;
}

inline nlohmann::json manifest_to_json(const PairManifest& m) {
  nlohmann::json records = nlohmann::json::array();
  for (const auto& r : m.records) records.push_back(record_to_json(r));
  return {{"schema_version", m.schema_version},
          {"bins", {m.m, m.k}},
          {"split_ratios", {m.ratios[0], m.ratios[1], m.ratios[2]}},
          {"split_seed", m.split_seed},
          {"records", records}};
}

inline PairManifest manifest_from_json(const nlohmann::json& j) {
  PairManifest m;
  try {
    m.schema_version = j.at("schema_version").get<int>();
    require(m.schema_version == kManifestSchemaVersion, ErrorCode::SchemaMismatch,
            "manifest schema version " + std::to_string(m.schema_version) + ", expected " +
                std::to_string(kManifestSchemaVersion));
    if (j.contains("bins")) {
      const auto b = j.at("bins").get<std::vector<int>>();
      require(b.size() == 2 && b[0] >= 1 && b[1] >= 1, ErrorCode::Parse, "bins needs two positive values");
      m.m = b[0];
      m.k = b[1];
    }
    const auto ratios = j.at("split_ratios").get<std::vector<double>>();
    require(ratios.size() == 3, ErrorCode::Parse, "split_ratios needs 3 values");
    m.ratios = {ratios[0], ratios[1], ratios[2]};
    require(valid_ratios(m.ratios), ErrorCode::Parse, "split ratios must be in [0, 1] and sum to 1");
    m.split_seed = j.at("split_seed").get<std::uint64_t>();
    for (const auto& r : j.at("records")) m.records.push_back(record_from_json(r));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("bad manifest: ") + e.what());
  }
  return m;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::Io, "cannot write " + path.string());
  out << text;
  require(static_cast<bool>(out), ErrorCode::Io, "failed writing " + path.string());
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::MissingFile, "missing " + path.string(), {path.string()});
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, "bad JSON in " + path.string() + ": " + e.what());
  }
}

inline void save_manifest(const PairManifest& m, const std::filesystem::path& path) {
  write_text(path, manifest_to_json(m).dump(2) + "\n");
}

/// Loads a manifest and checks that every referenced file exists; the first
/// missing one raises MissingFile naming its record id.
inline PairManifest load_manifest(const std::filesystem::path& path) {
  PairManifest m = manifest_from_json(read_json(path));
  const auto root = path.parent_path();
  for (const auto& r : m.records)
    for (const auto& rel : {r.depth_path, r.tactile_path})
      require(std::filesystem::exists(root / rel), ErrorCode::MissingFile,
              "record " + r.id + " references missing " + (root / rel).string(), {r.id});
  return m;
}

/// Parses every referenced file and checks dimensions against the manifest.
inline void verify_manifest(const PairManifest& m, const std::filesystem::path& root) {
  for (const auto& r : m.records) {
    const DepthMap d = read_depth_map(root / r.depth_path);
    require(d.m == m.m && d.k == m.k, ErrorCode::DimensionMismatch, "depth map of " + r.id + " is not m x k", {r.id});
    const RgbImage t = read_png(root / r.tactile_path);
    require(t.height == d.m && t.width == d.k, ErrorCode::DimensionMismatch,
            "tactile image of " + r.id + " does not match its depth map", {r.id});
  }
}

// ---------------------------------------------------------------------------
// Split
// ---------------------------------------------------------------------------

/// Floor allocation of n records over (train, val, test), remainder to train.
inline std::array<std::size_t, 3> split_counts(std::size_t n, const std::array<double, 3>& ratios) {
  const auto val = static_cast<std::size_t>(std::floor(ratios[1] * static_cast<double>(n) + 1e-9));
  const auto test = static_cast<std::size_t>(std::floor(ratios[2] * static_cast<double>(n) + 1e-9));
  return {n - val - test, val, test};
}

inline std::uint64_t split_key(std::uint64_t seed, const std::string& id) { return derive_seed(seed, fnv1a(id)); }

/// Assigns splits keyed by a seeded hash of each record id. Records are
/// ranked by hash; test takes the lowest, val the next, train the rest. If
/// the manifest was already split with the same seed and ratios, existing
/// assignments are kept and only unassigned records are placed, so adding
/// records and re-splitting does not move earlier ones. Existing train
/// records are moved only when the new floor counts cannot otherwise be met.
inline PairManifest split(PairManifest m, const std::array<double, 3>& ratios, std::uint64_t seed) {
  require(valid_ratios(ratios), ErrorCode::InvalidParams, "split ratios must be in [0, 1] and sum to 1", {"ratios"});
  const bool incremental = m.split_seed == seed && m.ratios == ratios;
  if (!incremental)
    for (auto& r : m.records) r.split = Split::unassigned;
  m.ratios = ratios;
  m.split_seed = seed;

  const auto target = split_counts(m.records.size(), ratios);
  std::vector<std::size_t> order(m.records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<std::uint64_t> keys(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) keys[i] = split_key(seed, m.records[i].id);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return keys[a] != keys[b] ? keys[a] < keys[b] : m.records[a].id < m.records[b].id;
  });

  std::array<std::size_t, 3> have{0, 0, 0};
  for (const auto& r : m.records)
    if (r.split != Split::unassigned) ++have[static_cast<std::size_t>(r.split)];
  // Shrink any over-full split (possible only after ratios or records were
  // edited by hand) by releasing its highest-ranked members.
  for (std::size_t s = 0; s < 3; ++s)
    for (auto it = order.rbegin(); it != order.rend() && have[s] > target[s]; ++it)
      if (static_cast<std::size_t>(m.records[*it].split) == s) {
        m.records[*it].split = Split::unassigned;
        --have[s];
      }
  for (Split s : {Split::test, Split::val}) {
    const auto si = static_cast<std::size_t>(s);
    for (std::size_t i : order)
      if (have[si] < target[si] && m.records[i].split == Split::unassigned) {
        m.records[i].split = s;
        ++have[si];
      }
    for (std::size_t i : order)
      if (have[si] < target[si] && m.records[i].split == Split::train) {
        m.records[i].split = s;
        --have[0];
        ++have[si];
      }
  }
  for (auto& r : m.records)
    if (r.split == Split::unassigned) r.split = Split::train;
  return m;
}

// ---------------------------------------------------------------------------
// Collection
// ---------------------------------------------------------------------------

struct CollectConfig {
  SensorGeometry sensor;
  GraspParams grasp;
  SegmentationParams segmentation;
  RegistrationConfig registration;
  CameraRigParams rig;
  ElastomerModel elastomer;
  int m = 100, k = 100;
  double max_gap = 0.001;      // m, hole-filling radius for depth maps
  double model_leaf = 0.003;   // m, model resolution used for registration
  double min_success = 0.5;    // fraction of grasps that must yield both contacts
  unsigned jobs = 1;
};

/// Result of one object's collection; pair images are kept in memory until
/// write_collection puts them on disk.
struct Collection {
  std::vector<PairRecord> records;
  std::vector<DepthMap> depth;
  std::vector<RgbImage> tactile;
  RegistrationResult registration;
  std::size_t attempted = 0, succeeded = 0;
  std::vector<std::string> skipped;  // "<object>-g<index>: reason"
};

/// Runs one object through segmentation, registration and the grasp loop.
/// Each grasp yields two records (left, right): the depth map comes from the
/// registered model, the tactile image from rendering the contact with the
/// object at its true pose. Grasps whose contact volume is empty for either
/// finger are skipped.
inline Collection collect(const Scene& scene, const SyntheticObject& model, const std::string& object_id,
                          std::size_t n_grasps, const CollectConfig& config, std::uint64_t seed) {
  require(config.m >= 1 && config.k >= 1, ErrorCode::InvalidParams, "bins must be >= 1", {"bins"});
  require(config.sensor.valid(), ErrorCode::InvalidParams, "invalid sensor geometry", {"sensor"});
  require(scene.object.kind == model.kind && scene.object.seed == model.seed, ErrorCode::InvalidArgument,
          "scene and model describe different objects");

  Collection out;
  const auto cams = default_rig(config.rig);
  const LabeledCloud views = render_views(scene, cams, derive_seed(seed, 1));
  const PointCloud object = segment_object(views.cloud, config.segmentation, derive_seed(seed, 2));

  RegistrationConfig reg = config.registration;
  if (reg.coarse.viewpoints.empty())
    for (const auto& c : cams) reg.coarse.viewpoints.push_back(c.pose.translation);
  const PointCloud reg_model = config.model_leaf > 0 ? voxel_downsample(model.cloud, config.model_leaf) : model.cloud;
  out.registration = register_model(reg_model, object, reg, derive_seed(seed, 3));
  require(accepted(out.registration, reg), ErrorCode::RegistrationFailed,
          "registration of " + object_id + " did not converge to an acceptable fit", {object_id});

  const PointCloud registered = transform(model.cloud, out.registration.pose);
  const PointCloud& truth = scene.object_world;

  struct Slot {
    bool ok = false;
    std::string reason;
    GraspSample grasp;
    std::array<DepthMap, 2> depth;
    std::array<RgbImage, 2> tactile;
  };
  std::vector<Slot> slots(n_grasps);
  parallel_for(n_grasps, config.jobs, [&](std::size_t g) {
    Slot& s = slots[g];
    // The gripper closes on the physical object, so contacts are placed
    // against the true surface.
    s.grasp = sample_grasp(truth, config.sensor, config.grasp, derive_seed(seed, 1000 + g));
    try {
      for (int f = 0; f < 2; ++f) {
        const Finger finger = f == 0 ? Finger::left : Finger::right;
        const PointCloud input = extract_contact_volume(registered, s.grasp, finger, config.sensor);
        const PointCloud contact = extract_contact_volume(truth, s.grasp, finger, config.sensor);
        s.depth[static_cast<std::size_t>(f)] = generate_depth(input, config.sensor, config.m, config.k, config.max_gap);
        s.tactile[static_cast<std::size_t>(f)] =
            render(generate_depth(contact, config.sensor, config.m, config.k, config.max_gap), config.elastomer);
      }
      s.ok = true;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::EmptyContact) throw;
      s.reason = e.what();
    }
  });

  out.attempted = n_grasps;
  for (std::size_t g = 0; g < n_grasps; ++g) {
    Slot& s = slots[g];
    if (!s.ok) {
      out.skipped.push_back(grasp_id(object_id, static_cast<int>(g)) + ": " + s.reason);
      continue;
    }
    ++out.succeeded;
    for (int f = 0; f < 2; ++f) {
      PairRecord r;
      r.finger = f == 0 ? Finger::left : Finger::right;
      r.id = record_id(object_id, static_cast<int>(g), r.finger);
      r.depth_path = "depth/" + r.id + ".f32";
      r.tactile_path = "tactile/" + r.id + ".png";
      r.object_id = object_id;
      r.grasp_index = static_cast<int>(g);
      r.position = s.grasp.position;
      r.yaw = s.grasp.yaw;
      r.contact_depth = s.grasp.contact_depth;
      out.records.push_back(r);
      out.depth.push_back(std::move(s.depth[static_cast<std::size_t>(f)]));
      out.tactile.push_back(std::move(s.tactile[static_cast<std::size_t>(f)]));
    }
  }
  require(static_cast<double>(out.succeeded) >= config.min_success * static_cast<double>(n_grasps),
          ErrorCode::TooManyFailures,
          object_id + ": only " + std::to_string(out.succeeded) + " of " + std::to_string(n_grasps) + " grasps made contact",
          {object_id});
  return out;
}

/// Writes the pair files under `root` (depth/, tactile/) and returns the
/// merged manifest (unsplit). Single writer.
inline PairManifest write_collection(std::span<const Collection> parts, const std::filesystem::path& root, int m, int k) {
  std::filesystem::create_directories(root / "depth");
  std::filesystem::create_directories(root / "tactile");
  PairManifest manifest;
  manifest.m = m;
  manifest.k = k;
  for (const auto& part : parts)
    for (std::size_t i = 0; i < part.records.size(); ++i) {
      write_depth_map(root / part.records[i].depth_path, part.depth[i]);
      write_png(root / part.records[i].tactile_path, part.tactile[i]);
      manifest.records.push_back(part.records[i]);
    }
  return manifest;
}

/// Grasps per object when `total` grasps are spread over `objects` objects;
/// earlier objects take the remainder.
inline std::vector<std::size_t> grasps_per_object(std::size_t total, std::size_t objects) {
  require(objects >= 1, ErrorCode::InvalidArgument, "need at least one object");
  std::vector<std::size_t> out(objects, total / objects);
  for (std::size_t i = 0; i < total % objects; ++i) ++out[i];
  return out;
}

inline std::string object_name(std::size_t index) { return "obj" + std::to_string(index); }

/// Object i cycles through the three kinds; each gets its own seed and a
/// random resting pose near the table center.
inline Scene make_scene(std::size_t index, std::uint64_t seed, const TableParams& table = {}) {
  const auto kind = static_cast<ObjectKind>(index % 3);
  const std::uint64_t s = derive_seed(seed, 0x0B1EC7 + index);
  SyntheticObject obj = make_object(kind, s);
  Rng rng(derive_seed(s, 7));
  const double yaw = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double x = rng.uniform(-0.03, 0.03), y = rng.uniform(-0.03, 0.03);
  return compose_scene(obj, table, resting_pose(yaw, x, y));
}

// ---------------------------------------------------------------------------
// External pair directories
// ---------------------------------------------------------------------------

/// Builds a manifest for an externally recorded dataset laid out as
///   <dir>/records.json            [{"id", "object_id"?, "finger"?, "grasp"?}, ...]
///   <dir>/depth/<id>.f32 (+ .json sidecar)
///   <dir>/tactile/<id>.png
/// Records start unassigned; files are checked as in load_manifest.
inline PairManifest import_pairs(const std::filesystem::path& dir) {
  const auto j = read_json(dir / "records.json");
  require(j.is_array(), ErrorCode::Parse, "records.json must be an array");
  PairManifest m;
  bool first = true;
  for (const auto& item : j) {
    nlohmann::json rec = item;
    require(rec.contains("id") && rec.at("id").is_string(), ErrorCode::Parse, "record without a string id");
    const std::string id = rec.at("id").get<std::string>();
    rec["depth"] = "depth/" + id + ".f32";
    rec["tactile"] = "tactile/" + id + ".png";
    rec["split"] = "unassigned";
    PairRecord r = record_from_json(rec);
    for (const auto& rel : {r.depth_path, r.tactile_path})
      require(std::filesystem::exists(dir / rel), ErrorCode::MissingFile, "record " + id + " is missing " + rel, {id});
    if (first) {
      const DepthMap d = read_depth_map(dir / r.depth_path);
      m.m = d.m;
      m.k = d.k;
      first = false;
    }
    m.records.push_back(std::move(r));
  }
  return m;
}

}  // namespace tactile
