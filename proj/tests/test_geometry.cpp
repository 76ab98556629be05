#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mvlift/error.hpp"
#include "mvlift/geometry.hpp"
#include "test_util.hpp"

using namespace mvlift;

namespace {

const double kQuarter = std::numbers::pi / 2.0;

CameraParams cam_with(const Mat3& R, const Vec3& t) {
  CameraParams c;
  c.R = R;
  c.t = t;
  return c;
}

void expect_vec_near(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double tol) {
  ASSERT_EQ(a.size(), b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], tol) << "entry " << i;
}

}  // namespace

TEST(WorldToCamera, KnownRotation) {
  expect_vec_near(world_to_camera(Vec3(0, -1, 0), cam_with(rotation_z(kQuarter), Vec3::Zero())), Vec3(1, 0, 0), 1e-15);
}

TEST(WorldToCamera, IdentityAndTranslation) {
  EXPECT_EQ(world_to_camera(Vec3(1, 2, 3), cam_with(Mat3::Identity(), Vec3::Zero())), Vec3(1, 2, 3));
  EXPECT_EQ(world_to_camera(Vec3::Zero(), cam_with(Mat3::Identity(), Vec3(0, 0, 5000))), Vec3(0, 0, 5000));
}

TEST(WorldToCamera, RejectsNonFinite) {
  const auto cam = cam_with(Mat3::Identity(), Vec3::Zero());
  EXPECT_THROW(world_to_camera(Vec3(NAN, 0, 0), cam), Error);
  EXPECT_THROW(camera_to_world_relative(Vec3(0, INFINITY, 0), cam), Error);
}

TEST(CameraToWorldRelative, AppliesTransposeOnly) {
  expect_vec_near(camera_to_world_relative(Vec3(1, 0, 0), cam_with(rotation_z(kQuarter), Vec3(7, 8, 9))),
                  Vec3(0, -1, 0), 1e-15);
  EXPECT_EQ(camera_to_world_relative(Vec3(4, 5, 6), cam_with(Mat3::Identity(), Vec3::Zero())), Vec3(4, 5, 6));
}

TEST(CameraToWorldRelative, RoundTripRandom) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1000, 1000);
  for (int k = 0; k < 100; ++k) {
    const auto cam = cam_with(testutil::random_rotation(rng), Vec3::Zero());
    const Vec3 X(u(rng), u(rng), u(rng));
    expect_vec_near(world_to_camera(camera_to_world_relative(X, cam), cam), X, 1e-9);
  }
}

TEST(ProjectPerspective, Examples) {
  EXPECT_EQ(project_perspective(Vec3(2, 4, 2)), Vec2(1, 2));
  EXPECT_EQ(project_perspective(Vec3(0, 0, 7)), Vec2(0, 0));
  try {
    project_perspective(Vec3(1, 1, 1e-9));
    FAIL() << "expected degenerate depth";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateDepth);
  }
}

TEST(ProjectPerspective, ScaleInvariance) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-5, 5), s(0.01, 100);
  for (int k = 0; k < 100; ++k) {
    Vec3 X(u(rng), u(rng), u(rng));
    if (std::abs(X.z()) < 0.1) X.z() = 0.5;
    const double scale = s(rng);
    expect_vec_near(project_perspective(scale * X), project_perspective(X), 1e-12 * (1 + X.norm() / std::abs(X.z())));
  }
}

TEST(ProjectOrthographic, Examples) {
  EXPECT_EQ(project_orthographic(Vec3(2, 4, 2)), Vec2(2, 4));
  EXPECT_EQ(project_orthographic(Vec3(0, 0, -3)), Vec2(0, 0));
  EXPECT_EQ(project_orthographic(Vec3(3, -1, 1e-12)), project_orthographic(Vec3(3, -1, 1e6)));
}

TEST(ApplyIntrinsics, Examples) {
  expect_vec_near(apply_intrinsics(Vec2(0.1, -0.2), testutil::intrinsics(1000, 500, 500)), Vec2(600, 300), 1e-12);
  EXPECT_EQ(apply_intrinsics(Vec2(0, 0), Mat3::Identity()), Vec2(0, 0));
  EXPECT_EQ(apply_intrinsics(Vec2(1, 1), testutil::intrinsics(2, 0, 0)), Vec2(2, 2));
}

TEST(ApplyIntrinsics, SkewEntersX) {
  const Vec2 px = apply_intrinsics(Vec2(1, 2), testutil::intrinsics(10, 1, 3, 0.5));
  EXPECT_DOUBLE_EQ(px.x(), 10 * 1 + 0.5 * 2 + 1);
  EXPECT_DOUBLE_EQ(px.y(), 10 * 2 + 3);
}

TEST(ApplyIntrinsics, ExactlyAffine) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2, 2);
  const Mat3 K = testutil::intrinsics(812.5, 333.0, 271.0, 1.25);
  for (int k = 0; k < 50; ++k) {
    const Vec2 p(u(rng), u(rng)), q(u(rng), u(rng));
    const double a = u(rng), b = u(rng);
    const Vec2 lhs = apply_intrinsics(a * p + b * q, K);
    const Vec2 rhs = a * apply_intrinsics(p, K) + b * apply_intrinsics(q, K) + (1 - a - b) * apply_intrinsics(Vec2::Zero(), K);
    expect_vec_near(lhs, rhs, 1e-9);
  }
}

TEST(PerspectiveJacobian, ClosedFormExamples) {
  Mat23 expected;
  expected << 0.5, 0, -0.25, 0, 0.5, -0.25;
  EXPECT_TRUE(perspective_jacobian(Vec3(1, 1, 2)).isApprox(expected, 1e-15));
  expected << 1, 0, 0, 0, 1, 0;
  EXPECT_EQ(perspective_jacobian(Vec3(0, 0, 1)), expected);
  EXPECT_THROW(perspective_jacobian(Vec3(1, 1, 0)), Error);
}

TEST(PerspectiveJacobian, MatchesCentralDifferences) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> xy(-5, 5), z(0.5, 10);
  for (int k = 0; k < 100; ++k) {
    const Vec3 X(xy(rng), xy(rng), z(rng));
    const Mat23 J = perspective_jacobian(X);
    const double h = 1e-6 * std::max(1.0, X.norm());
    for (int c = 0; c < 3; ++c) {
      Vec3 up = X, down = X;
      up[c] += h;
      down[c] -= h;
      const Vec2 fd = (project_perspective(up) - project_perspective(down)) / (2 * h);
      for (int r = 0; r < 2; ++r) {
        if (J(r, c) == 0.0) {
          EXPECT_EQ(fd[r], 0.0);
          continue;
        }
        EXPECT_LT(testutil::rel_err(J(r, c), fd[r]), 1e-6) << "X=" << X.transpose() << " r=" << r << " c=" << c;
      }
    }
  }
}

TEST(ProjectionJacobian, OrthographicIsConstant) {
  Mat23 expected;
  expected << 1, 0, 0, 0, 1, 0;
  EXPECT_EQ(projection_jacobian(Vec3(3, 4, -100), Projection::kOrthographic), expected);
}

TEST(CameraParams, ValidateRejectsBadMatrices) {
  CameraParams c;
  EXPECT_NO_THROW(c.validate());
  c.R(0, 0) = 1.001;
  EXPECT_THROW(c.validate(), Error);
  c.R = Mat3::Identity();
  c.R(2, 2) = -1;  // reflection, det = -1
  c.R(1, 1) = 1;
  EXPECT_THROW(c.validate(), Error);
  c.R = Mat3::Identity();
  c.K(1, 0) = 0.1;
  EXPECT_THROW(c.validate(), Error);
  c.K = Mat3::Identity();
  c.K(2, 2) = 2;
  EXPECT_THROW(c.validate(), Error);
  c.K = testutil::intrinsics(1000, 500, 500, 3.0);
  EXPECT_NO_THROW(c.validate());
}

TEST(LookAt, TargetOnOpticalAxis) {
  const Vec3 center(3000, -1200, 1500), target(0, 0, 1300);
  const auto cam = testutil::camera_looking_at(center, target);
  EXPECT_NO_THROW(cam.validate());
  const Vec3 x = world_to_camera(target, cam);
  EXPECT_NEAR(x.x(), 0, 1e-9);
  EXPECT_NEAR(x.y(), 0, 1e-9);
  EXPECT_NEAR(x.z(), (center - target).norm(), 1e-9);
  expect_vec_near(cam.center(), center, 1e-9);
  // World up maps to image up (negative y).
  EXPECT_LT(world_to_camera(target + Vec3(0, 0, 100), cam).y(), 0.0);
}

TEST(ProjectionNames, RoundTrip) {
  for (auto p : {Projection::kOrthographic, Projection::kPerspective}) {
    EXPECT_EQ(projection_from_string(to_string(p)), p);
  }
  EXPECT_THROW(projection_from_string("fisheye"), Error);
}
