#include <gtest/gtest.h>

#include <filesystem>
#include <map>
#include <functional>
#include <numeric>

#include "tactile/kdtree.hpp"
#include "tactile/ply.hpp"
#include "tactile/segmentation.hpp"
#include "tactile/voxel.hpp"

using namespace tactile;

namespace {

PointCloud random_cloud(std::size_t n, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
  Rng rng(seed);
  PointCloud c;
  for (std::size_t i = 0; i < n; ++i) c.push_back(Vec3(rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi)));
  return c;
}

PointCloud blob(const Vec3& center, double radius, std::size_t n, Rng& rng) {
  PointCloud c;
  for (std::size_t i = 0; i < n; ++i) {
    Vec3 d(rng.normal(), rng.normal(), rng.normal());
    c.push_back(center + radius * rng.uniform() * d.normalized());
  }
  return c;
}

}  // namespace

TEST(Crop, KeepsPointsInsideClosedBox) {
  PointCloud c;
  c.push_back(Vec3(0, 0, 0));
  c.push_back(Vec3(5, 5, 5));
  const auto out = crop_aabb(c, {Vec3(-1, -1, -1), Vec3(1, 1, 1)});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out.points[0], Vec3(0, 0, 0));
}

TEST(Crop, OwnBoundingBoxIsIdentity) {
  const auto c = random_cloud(500, 1);
  const auto out = crop_aabb(c, bounding_box(c));
  EXPECT_EQ(out.points, c.points);
}

TEST(Crop, MatchesBruteForceFilter) {
  const auto c = random_cloud(1000, 2);
  const Aabb box{Vec3(0, 0, 0), Vec3(0.5, 1, 1)};
  std::vector<Vec3> expected;
  for (const auto& p : c.points)
    if (p.x() >= 0 && p.x() <= 0.5 && p.y() >= 0 && p.y() <= 1 && p.z() >= 0 && p.z() <= 1) expected.push_back(p);
  EXPECT_EQ(crop_aabb(c, box).points, expected);
}

TEST(Crop, InvalidBoxThrows) {
  EXPECT_THROW(crop_aabb(random_cloud(3, 1), {Vec3(1, 0, 0), Vec3(0, 1, 1)}), Error);
}

TEST(RemovePlanes, LeavesSphereAbovePlane) {
  Rng rng(3);
  PointCloud c;
  for (int i = 0; i < 5000; ++i) c.push_back(Vec3(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), 0.0));
  std::size_t sphere = 0;
  for (int i = 0; i < 500; ++i) {
    const Vec3 d = Vec3(rng.normal(), rng.normal(), rng.normal()).normalized();
    c.push_back(Vec3(0, 0, 0.2) + 0.05 * d);
    ++sphere;
  }
  const auto out = remove_planes(c, 0.005, 0.2, 11);
  // Plane-distance oracle: every survivor is off the table plane.
  for (const auto& p : out.points) EXPECT_GT(std::abs(p.z()), 0.005);
  EXPECT_NEAR(static_cast<double>(out.size()), static_cast<double>(sphere), 0.01 * sphere);
}

TEST(RemovePlanes, NoDominantPlaneLeavesCloudUnchanged) {
  Rng rng(4);
  PointCloud c;
  for (int i = 0; i < 2000; ++i) c.push_back(Vec3(rng.normal(), rng.normal(), rng.normal()).normalized());
  EXPECT_EQ(remove_planes(c, 0.005, 0.2, 5).size(), c.size());
}

TEST(RemovePlanes, RemovesTwoStackedPlanes) {
  Rng rng(5);
  PointCloud c;
  for (int i = 0; i < 4000; ++i) c.push_back(Vec3(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), 0.0));
  for (int i = 0; i < 4000; ++i) c.push_back(Vec3(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), 0.3));
  auto b = blob(Vec3(0, 0, 0.15), 0.05, 2000, rng);
  c.append(b);
  const auto out = remove_planes(c, 0.005, 0.2, 6);
  for (const auto& p : out.points) {
    EXPECT_GT(std::abs(p.z()), 0.005);
    EXPECT_GT(std::abs(p.z() - 0.3), 0.005);
  }
  EXPECT_GT(out.size(), 1900u);
}

TEST(RemovePlanes, EmptyInputGivesEmptyOutput) { EXPECT_TRUE(remove_planes(PointCloud{}, 0.005, 0.2, 1).empty()); }

TEST(Cluster, SeparatedBlobs) {
  Rng rng(6);
  PointCloud c = blob(Vec3(0, 0, 0), 0.01, 100, rng);
  c.append(blob(Vec3(0.1, 0, 0), 0.01, 100, rng));
  const auto tight = euclidean_cluster(c, 0.02, 1, 1000);
  ASSERT_EQ(tight.size(), 2u);
  EXPECT_EQ(tight[0].size(), 100u);
  EXPECT_EQ(tight[1].size(), 100u);
  const auto loose = euclidean_cluster(c, 0.2, 1, 1000);
  ASSERT_EQ(loose.size(), 1u);
  EXPECT_EQ(loose[0].size(), 200u);
}

TEST(Cluster, MatchesUnionFindOracle) {
  Rng rng(7);
  PointCloud c;
  for (int b = 0; b < 12; ++b) c.append(blob(Vec3(rng.uniform(0, 0.3), rng.uniform(0, 0.3), rng.uniform(0, 0.3)), 0.02, 40 + 10 * b, rng));
  const double tol = 0.015;
  const std::size_t min_size = 50, max_size = 400;

  std::vector<std::size_t> parent(c.size());
  std::iota(parent.begin(), parent.end(), 0);
  std::function<std::size_t(std::size_t)> find = [&](std::size_t x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
  for (std::size_t i = 0; i < c.size(); ++i)
    for (std::size_t j = i + 1; j < c.size(); ++j)
      if ((c.points[i] - c.points[j]).norm() <= tol) parent[find(i)] = find(j);
  std::map<std::size_t, std::vector<std::size_t>> comps;
  for (std::size_t i = 0; i < c.size(); ++i) comps[find(i)].push_back(i);
  std::vector<std::vector<std::size_t>> expected;
  for (auto& [root, members] : comps)
    if (members.size() >= min_size && members.size() <= max_size) expected.push_back(members);

  auto got = euclidean_cluster_indices(c, tol, min_size, max_size);
  for (auto& g : got) std::sort(g.begin(), g.end());
  auto key = [](const std::vector<std::size_t>& v) { return v.front(); };
  std::sort(got.begin(), got.end(), [&](auto& a, auto& b) { return key(a) < key(b); });
  std::sort(expected.begin(), expected.end(), [&](auto& a, auto& b) { return key(a) < key(b); });
  EXPECT_EQ(got, expected);
}

TEST(Cluster, ReturnsLargestFirst) {
  Rng rng(8);
  PointCloud c = blob(Vec3(0, 0, 0), 0.01, 60, rng);
  c.append(blob(Vec3(1, 0, 0), 0.01, 150, rng));
  c.append(blob(Vec3(2, 0, 0), 0.01, 90, rng));
  const auto cl = euclidean_cluster(c, 0.02, 1, 1000);
  ASSERT_EQ(cl.size(), 3u);
  EXPECT_EQ(cl[0].size(), 150u);
  EXPECT_EQ(cl[1].size(), 90u);
  EXPECT_EQ(cl[2].size(), 60u);
}

TEST(Voxel, TwoPointsOneVoxel) {
  PointCloud c;
  c.push_back(Vec3(0, 0, 0));
  c.push_back(Vec3(0.004, 0, 0));
  const auto out = voxel_downsample(c, 0.01);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_NEAR((out.points[0] - Vec3(0.002, 0, 0)).norm(), 0.0, 1e-15);
}

TEST(Voxel, SeparatedPointsUnchangedCount) {
  PointCloud c;
  for (int i = 0; i < 10; ++i) c.push_back(Vec3(0.02 * i, 0.0, 0.0));
  EXPECT_EQ(voxel_downsample(c, 0.01).size(), 10u);
}

TEST(Voxel, SingleVoxelPreservesCentroid) {
  const auto c = random_cloud(300, 9, 0.0, 0.009);
  const auto out = voxel_downsample(c, 0.01);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_NEAR((out.points[0] - centroid(c)).norm(), 0.0, 1e-12);
}

TEST(Voxel, NonPositiveLeafThrows) { EXPECT_THROW(voxel_downsample(random_cloud(3, 1), 0.0), Error); }

TEST(Transform, IdentityAndTranslation) {
  const auto c = random_cloud(50, 10);
  EXPECT_EQ(transform(c, RigidTransform{}).points, c.points);
  PointCloud o;
  o.push_back(Vec3::Zero());
  EXPECT_EQ(transform(o, RigidTransform{Mat3::Identity(), Vec3(1, 2, 3)}).points[0], Vec3(1, 2, 3));
}

TEST(Transform, InverseRoundTripAndDistances) {
  const auto c = random_cloud(200, 11);
  const auto t = RigidTransform::from_axis_angle(Vec3(1, 2, 3).normalized(), 0.7, Vec3(0.1, -0.2, 0.3));
  const auto moved = transform(c, t);
  const auto back = transform(moved, t.inverse());
  for (std::size_t i = 0; i < c.size(); ++i) {
    EXPECT_LT((back.points[i] - c.points[i]).cwiseAbs().maxCoeff(), 1e-9);
    if (i > 0)
      EXPECT_NEAR((moved.points[i] - moved.points[i - 1]).norm(), (c.points[i] - c.points[i - 1]).norm(), 1e-9);
  }
  const auto id = t * t.inverse();
  EXPECT_LT((id.rotation - Mat3::Identity()).norm(), 1e-9);
  EXPECT_LT(id.translation.norm(), 1e-9);
  EXPECT_NEAR(t.rotation.determinant(), 1.0, 1e-9);
}

TEST(Transform, RotatesNormalsOnly) {
  PointCloud c;
  c.push_back(Vec3(1, 0, 0), Vec3(1, 0, 0));
  const auto t = RigidTransform::from_axis_angle(Vec3::UnitZ(), std::numbers::pi / 2, Vec3(5, 5, 5));
  const auto out = transform(c, t);
  EXPECT_LT((out.normals[0] - Vec3(0, 1, 0)).norm(), 1e-12);
  EXPECT_LT((out.points[0] - Vec3(5, 6, 5)).norm(), 1e-12);
}

TEST(KdTree, NearestMatchesExhaustive) {
  const auto c = random_cloud(2000, 12);
  const KdTree tree(c.points);
  Rng rng(13);
  for (int q = 0; q < 200; ++q) {
    const Vec3 p(rng.uniform(), rng.uniform(), rng.uniform());
    double best = 1e9;
    for (const auto& x : c.points) best = std::min(best, (x - p).squaredNorm());
    EXPECT_DOUBLE_EQ(tree.nearest(p).sq_dist, best);
  }
}

TEST(KdTree, RadiusSearchMatchesExhaustive) {
  const auto c = random_cloud(1500, 14);
  const KdTree tree(c.points);
  const Vec3 q(0.5, 0.5, 0.5);
  std::vector<std::size_t> expected;
  for (std::size_t i = 0; i < c.size(); ++i)
    if ((c.points[i] - q).norm() <= 0.2) expected.push_back(i);
  EXPECT_EQ(tree.radius_search(q, 0.2), expected);
}

TEST(Ply, RoundTripWithNormals) {
  PointCloud c;
  Rng rng(15);
  for (int i = 0; i < 100; ++i)
    c.push_back(Vec3(rng.uniform(), rng.uniform(), rng.uniform()), Vec3(rng.normal(), rng.normal(), rng.normal()).normalized());
  const auto path = std::filesystem::temp_directory_path() / "tactile_test_roundtrip.ply";
  write_ply(path, c);
  const auto back = read_ply(path);
  ASSERT_EQ(back.size(), c.size());
  ASSERT_TRUE(back.has_normals());
  for (std::size_t i = 0; i < c.size(); ++i) {
    EXPECT_LT((back.points[i] - c.points[i]).norm(), 1e-6);
    EXPECT_LT((back.normals[i] - c.normals[i]).norm(), 1e-6);
  }
  std::filesystem::remove(path);
}

TEST(Ply, MissingFileThrows) {
  try {
    read_ply("/nonexistent/cloud.ply");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingFile);
  }
}
