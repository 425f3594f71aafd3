#include <gtest/gtest.h>

#include "tactile/registration.hpp"
#include "tactile/synth.hpp"
#include "tactile/voxel.hpp"

using namespace tactile;

namespace {

PointCloud random_cloud(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  PointCloud c;
  for (std::size_t i = 0; i < n; ++i) c.push_back(Vec3(rng.uniform(-0.05, 0.05), rng.uniform(-0.03, 0.03), rng.uniform(0, 0.02)));
  return c;
}

const PointCloud& box_model() {
  static const PointCloud model = voxel_downsample(make_object(ObjectKind::ridged_box, 1).cloud, 0.003);
  return model;
}

}  // namespace

TEST(FitRigid, RecoversKnownTransform) {
  const auto c = random_cloud(50, 1);
  const auto t = RigidTransform::from_axis_angle(Vec3(0.3, -1, 0.2).normalized(), 1.1, Vec3(0.2, 0.1, -0.3));
  const auto moved = transform(c, t);
  const auto fit = fit_rigid(c.points, moved.points);
  EXPECT_LT(rotation_error_deg(fit.rotation, t.rotation), 1e-6);
  EXPECT_LT(translation_error(fit, t), 1e-9);
  EXPECT_NEAR(fit.rotation.determinant(), 1.0, 1e-12);
}

TEST(Icp, IdentityOnSameCloud) {
  const auto c = random_cloud(400, 2);
  const auto r = icp_refine(c, c, RigidTransform{}, IcpParams{});
  EXPECT_TRUE(r.converged);
  EXPECT_LT(rotation_error_deg(r.pose.rotation, Mat3::Identity()), 1e-6);
  EXPECT_LT(r.pose.translation.norm(), 1e-9);
  EXPECT_LT(r.fitness, 1e-18);
}

TEST(Icp, SingleIterationMatchesBruteForceOracle) {
  const auto model = random_cloud(300, 3);
  const auto init = RigidTransform::from_axis_angle(Vec3::UnitZ(), 0.05, Vec3(0.002, -0.001, 0.0));
  const auto truth = RigidTransform::from_axis_angle(Vec3(1, 1, 0).normalized(), 0.08, Vec3(0.004, 0.0, 0.001));
  const auto scene = transform(random_cloud(250, 4), truth);
  IcpParams p;
  p.max_iterations = 1;
  p.max_correspondence_dist = 0.02;

  // Oracle: exhaustive nearest model point for each scene point under init^-1.
  std::vector<Vec3> src, dst;
  const auto inv = init.inverse();
  for (const auto& sp : scene.points) {
    const Vec3 q = inv.apply(sp);
    std::size_t best = 0;
    double bd = 1e300;
    for (std::size_t i = 0; i < model.size(); ++i) {
      const double d = (model.points[i] - q).squaredNorm();
      if (d < bd) bd = d, best = i;
    }
    if (bd <= p.max_correspondence_dist * p.max_correspondence_dist) {
      src.push_back(model.points[best]);
      dst.push_back(sp);
    }
  }
  const auto expected = fit_rigid(src, dst);
  const auto got = icp_refine(model, scene, init, p);
  EXPECT_EQ(got.iterations, 1);
  EXPECT_LT((got.pose.rotation - expected.rotation).norm(), 1e-12);
  EXPECT_LT((got.pose.translation - expected.translation).norm(), 1e-12);
}

TEST(Icp, FitnessTraceIsNonIncreasing) {
  const auto& model = box_model();
  const auto truth = RigidTransform::from_axis_angle(Vec3(0.2, 1, 0.4).normalized(), 0.12, Vec3(0.008, -0.005, 0.004));
  const auto scene = transform(model, truth);
  IcpParams p;
  p.max_correspondence_dist = 1.0;  // every point paired, so each step is a descent step
  std::vector<double> trace;
  icp_refine(model, scene, RigidTransform{}, p, &trace);
  ASSERT_GE(trace.size(), 2u);
  for (std::size_t i = 1; i < trace.size(); ++i) EXPECT_LE(trace[i], trace[i - 1] * (1 + 1e-12) + 1e-18) << "step " << i;
}

TEST(Icp, NoCorrespondencesThrows) {
  const auto c = random_cloud(50, 5);
  const auto far = transform(c, RigidTransform::from_translation(Vec3(10, 0, 0)));
  try {
    icp_refine(c, far, RigidTransform{}, IcpParams{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoCorrespondences);
  }
}

TEST(Coarse, SelfAlignmentIsNearIdentity) {
  const auto& model = box_model();
  const auto pose = coarse_align(model, model, CoarseParams{}, 7);
  EXPECT_LT(rotation_error_deg(pose.rotation, Mat3::Identity()), 10.0);
  EXPECT_LT(pose.translation.norm(), 0.01);
}

TEST(Register, RecoversNinetyDegreeYaw) {
  const auto& model = box_model();
  const auto truth = RigidTransform::from_axis_angle(Vec3::UnitZ(), std::numbers::pi / 2, Vec3(0.03, -0.02, 0.0));
  const auto scene = transform(model, truth);
  RegistrationConfig cfg;
  const auto r = register_model(model, scene, cfg, 8);
  EXPECT_TRUE(accepted(r, cfg));
  EXPECT_LT(rotation_error_deg(r.pose.rotation, truth.rotation), 1.0);
  EXPECT_LT(translation_error(r.pose, truth), 0.001);
}

TEST(Register, DegenerateCloudThrows) {
  PointCloud line;
  for (int i = 0; i < 100; ++i) line.push_back(Vec3(0.001 * i, 0, 0));
  try {
    register_model(line, box_model(), RegistrationConfig{}, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateCloud);
  }
}

TEST(Register, UnrelatedSceneIsRejected) {
  Rng rng(9);
  PointCloud sphere;
  for (int i = 0; i < 3000; ++i) sphere.push_back(0.06 * Vec3(rng.normal(), rng.normal(), rng.normal()).normalized());
  RegistrationConfig cfg;
  const auto r = register_model(box_model(), sphere, cfg, 10);
  EXPECT_FALSE(accepted(r, cfg));
}

TEST(PoseJson, RoundTrip) {
  const auto t = RigidTransform::from_axis_angle(Vec3(1, 2, 2).normalized(), -0.4, Vec3(0.1, 0.2, 0.3));
  const auto back = pose_from_json(nlohmann::json::parse(pose_to_json(t).dump()));
  EXPECT_LT((back.rotation - t.rotation).norm(), 1e-15);
  EXPECT_LT((back.translation - t.translation).norm(), 1e-15);
}

TEST(PoseJson, RejectsNonOrthonormal) {
  auto j = pose_to_json(RigidTransform{});
  j["rotation"][0] = 2.0;
  try {
    pose_from_json(j);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Parse);
  }
  EXPECT_THROW(pose_from_json(nlohmann::json{{"rotation", {1, 0}}}), Error);
}
