#include <gtest/gtest.h>

#include <filesystem>
#include <set>

#include "tactile/dataset.hpp"

using namespace tactile;
namespace fs = std::filesystem;

namespace {

PairManifest fake_manifest(std::size_t n, std::size_t first = 0) {
  PairManifest m;
  for (std::size_t i = first; i < first + n; ++i) {
    PairRecord r;
    r.finger = i % 2 ? Finger::right : Finger::left;
    r.object_id = object_name(i % 3);
    r.grasp_index = static_cast<int>(i / 2);
    r.id = record_id(r.object_id, r.grasp_index, r.finger) + "-" + std::to_string(i);
    r.depth_path = "depth/" + r.id + ".f32";
    r.tactile_path = "tactile/" + r.id + ".png";
    r.position = Vec3(0.01 * i, -0.02, 0.05);
    r.yaw = 0.1 * i;
    r.contact_depth = 0.001;
    m.records.push_back(r);
  }
  return m;
}

std::array<std::size_t, 3> count(const PairManifest& m) {
  std::array<std::size_t, 3> c{0, 0, 0};
  for (const auto& r : m.records) {
    EXPECT_NE(r.split, Split::unassigned);
    ++c[static_cast<std::size_t>(r.split)];
  }
  return c;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void touch_files(const PairManifest& m, const fs::path& root) {
  const SensorGeometry g;
  for (const auto& r : m.records) {
    fs::create_directories((root / r.depth_path).parent_path());
    fs::create_directories((root / r.tactile_path).parent_path());
    write_depth_map(root / r.depth_path, blank_depth_map(g, m.m, m.k));
    write_png(root / r.tactile_path, RgbImage(m.k, m.m));
  }
}

}  // namespace

TEST(Split, CountsFollowFloorRule) {
  const std::array<double, 3> r{0.7, 0.15, 0.15};
  EXPECT_EQ(count(split(fake_manifest(578), r, 1)), (std::array<std::size_t, 3>{406, 86, 86}));
  EXPECT_EQ(count(split(fake_manifest(10), r, 1)), (std::array<std::size_t, 3>{8, 1, 1}));
  EXPECT_EQ(count(split(fake_manifest(50), r, 1)), (std::array<std::size_t, 3>{36, 7, 7}));
  EXPECT_EQ(count(split(fake_manifest(1), r, 1)), (std::array<std::size_t, 3>{1, 0, 0}));
}

TEST(Split, TestTakesLowestKeys) {
  const auto m = split(fake_manifest(200), {0.7, 0.15, 0.15}, 5);
  std::vector<std::pair<std::uint64_t, Split>> ranked;
  for (const auto& r : m.records) ranked.emplace_back(split_key(5, r.id), r.split);
  std::sort(ranked.begin(), ranked.end());
  for (std::size_t i = 0; i < ranked.size(); ++i)
    EXPECT_EQ(ranked[i].second, i < 30 ? Split::test : i < 60 ? Split::val : Split::train) << i;
}

TEST(Split, DependsOnSeedNotOrder) {
  auto a = fake_manifest(100);
  auto b = a;
  std::reverse(b.records.begin(), b.records.end());
  const auto sa = split(a, {0.7, 0.15, 0.15}, 3), sb = split(b, {0.7, 0.15, 0.15}, 3);
  std::map<std::string, Split> ma, mb;
  for (const auto& r : sa.records) ma[r.id] = r.split;
  for (const auto& r : sb.records) mb[r.id] = r.split;
  EXPECT_EQ(ma, mb);
  const auto sc = split(a, {0.7, 0.15, 0.15}, 4);
  std::size_t moved = 0;
  for (const auto& r : sc.records) moved += ma[r.id] != r.split;
  EXPECT_GT(moved, 10u);
}

TEST(Split, AddingRecordsKeepsEarlierAssignments) {
  const std::array<double, 3> r{0.7, 0.15, 0.15};
  const auto first = split(fake_manifest(100), r, 9);
  auto grown = first;
  for (auto& rec : fake_manifest(40, 100).records) grown.records.push_back(rec);
  const auto second = split(grown, r, 9);
  EXPECT_EQ(count(second), (std::array<std::size_t, 3>{98, 21, 21}));
  std::size_t moved = 0;
  for (std::size_t i = 0; i < first.records.size(); ++i) {
    const Split before = first.records[i].split, after = second.records[i].split;
    if (before != Split::train) EXPECT_EQ(before, after) << first.records[i].id;
    moved += before != after;
  }
  EXPECT_EQ(moved, 0u);
}

TEST(Split, InvalidRatiosRejected) {
  try {
    split(fake_manifest(10), {0.5, 0.3, 0.3}, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidParams);
  }
}

TEST(Manifest, SaveLoadRoundTrip) {
  TempDir dir("tactile_manifest_rt");
  auto m = split(fake_manifest(12), {0.7, 0.15, 0.15}, 2);
  m.m = 20;
  m.k = 15;
  touch_files(m, dir.path);
  save_manifest(m, dir.path / "manifest.json");
  const auto back = load_manifest(dir.path / "manifest.json");
  EXPECT_EQ(back, m);
  verify_manifest(back, dir.path);
}

TEST(Manifest, MissingFileNamesRecord) {
  TempDir dir("tactile_manifest_missing");
  const auto m = fake_manifest(4);
  touch_files(m, dir.path);
  fs::remove(dir.path / m.records[2].tactile_path);
  save_manifest(m, dir.path / "manifest.json");
  try {
    load_manifest(dir.path / "manifest.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingFile);
    ASSERT_EQ(e.subjects().size(), 1u);
    EXPECT_EQ(e.subjects()[0], m.records[2].id);
  }
}

TEST(Manifest, SchemaMismatchAndParseErrors) {
  auto j = manifest_to_json(fake_manifest(2));
  j["schema_version"] = kManifestSchemaVersion + 1;
  try {
    manifest_from_json(j);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SchemaMismatch);
  }
  try {
    manifest_from_json(nlohmann::json{{"schema_version", kManifestSchemaVersion}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Parse);
  }
}

TEST(Manifest, DimensionMismatchDetected) {
  TempDir dir("tactile_manifest_dims");
  auto m = fake_manifest(2);
  m.m = 10;
  m.k = 10;
  touch_files(m, dir.path);
  m.k = 11;
  try {
    verify_manifest(m, dir.path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
}

TEST(Ids, Format) {
  EXPECT_EQ(record_id("obj0", 3, Finger::left), "obj0-g0003-L");
  EXPECT_EQ(record_id("obj12", 289, Finger::right), "obj12-g0289-R");
  EXPECT_EQ(grasps_per_object(25, 3), (std::vector<std::size_t>{9, 8, 8}));
  EXPECT_EQ(grasps_per_object(289, 1), (std::vector<std::size_t>{289}));
}

TEST(Collect, OneGraspYieldsTwoPairs) {
  TempDir dir("tactile_collect_one");
  const Scene scene = make_scene(0, 21);
  CollectConfig cfg;
  cfg.m = 40;
  cfg.k = 30;
  const auto part = collect(scene, make_object(scene.object.kind, scene.object.seed), "obj0", 1, cfg, 5);
  ASSERT_EQ(part.records.size(), 2u);
  EXPECT_EQ(part.records[0].id, "obj0-g0000-L");
  EXPECT_EQ(part.records[1].id, "obj0-g0000-R");
  EXPECT_LT(rotation_error_deg(part.registration.pose.rotation, scene.object.pose.rotation), 1.0);
  EXPECT_LT(translation_error(part.registration.pose, scene.object.pose), 0.001);

  const std::vector<Collection> parts{part};
  auto m = write_collection(parts, dir.path, cfg.m, cfg.k);
  save_manifest(m, dir.path / "manifest.json");
  const auto back = load_manifest(dir.path / "manifest.json");
  verify_manifest(back, dir.path);
  const auto d = read_depth_map(dir.path / back.records[0].depth_path);
  EXPECT_EQ(d.m, 40);
  EXPECT_EQ(d.k, 30);
  std::size_t contact = 0;
  for (float v : d.values) contact += v < 0;
  EXPECT_GT(contact, 0u);
}

TEST(Collect, MismatchedModelRejected) {
  const Scene scene = make_scene(0, 21);
  EXPECT_THROW(collect(scene, make_object(ObjectKind::embossed_plate, 1), "obj0", 1, CollectConfig{}, 5), Error);
}

TEST(Import, ReadsExternalPairDirectory) {
  TempDir dir("tactile_import");
  auto m = fake_manifest(3);
  m.m = 12;
  m.k = 9;
  for (auto& r : m.records) {
    r.depth_path = "depth/" + r.id + ".f32";
    r.tactile_path = "tactile/" + r.id + ".png";
  }
  touch_files(m, dir.path);
  nlohmann::json list = nlohmann::json::array();
  for (const auto& r : m.records) list.push_back({{"id", r.id}, {"finger", to_string(r.finger)}});
  write_text(dir.path / "records.json", list.dump());
  const auto got = import_pairs(dir.path);
  ASSERT_EQ(got.records.size(), 3u);
  EXPECT_EQ(got.m, 12);
  EXPECT_EQ(got.k, 9);
  EXPECT_EQ(got.records[1].finger, Finger::right);
  EXPECT_EQ(got.records[2].split, Split::unassigned);
  fs::remove(dir.path / m.records[0].depth_path);
  EXPECT_THROW(import_pairs(dir.path), Error);
}
