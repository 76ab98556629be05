#pragma once

#include <string>

#include <Eigen/Core>

namespace mvlift {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat23 = Eigen::Matrix<double, 2, 3>;

// Depth below which the perspective division is refused (mm).
inline constexpr double kZEpsilon = 1e-6;

enum class Projection { kOrthographic, kPerspective };

const char* to_string(Projection p);
Projection projection_from_string(const std::string& s);

// Pinhole camera: x_cam = R * x_world + t, pixel = K * proj(x_cam).
struct CameraParams {
  Mat3 R = Mat3::Identity();
  Vec3 t = Vec3::Zero();
  Mat3 K = Mat3::Identity();
  std::string cam_id;

  // Throws kInvalidInput if R is not a proper rotation (1e-9) or K is not
  // upper-triangular with K(2,2) == 1.
  void validate() const;

  Vec3 center() const { return -R.transpose() * t; }
};

Vec3 world_to_camera(const Vec3& world, const CameraParams& cam);

// Rotates a camera-frame *relative* vector into the world frame. The
// translation is not applied: relative poses carry no origin.
Vec3 camera_to_world_relative(const Vec3& rel, const CameraParams& cam);

Vec2 project_perspective(const Vec3& X, double z_eps = kZEpsilon);
Vec2 project_orthographic(const Vec3& X);
Vec2 project(const Vec3& X, Projection mode, double z_eps = kZEpsilon);

Vec2 apply_intrinsics(const Vec2& p, const Mat3& K);

// Jacobian of project_perspective at X.
Mat23 perspective_jacobian(const Vec3& X, double z_eps = kZEpsilon);
Mat23 projection_jacobian(const Vec3& X, Projection mode, double z_eps = kZEpsilon);

// Upper-left 2x2 block of K: the linear part of apply_intrinsics.
Eigen::Matrix2d intrinsics_linear(const Mat3& K);

Mat3 rotation_x(double radians);
Mat3 rotation_y(double radians);
Mat3 rotation_z(double radians);

// Rotation of a camera at `center` whose optical axis points at `target`,
// with image y pointing against `up`.
Mat3 look_at_rotation(const Vec3& center, const Vec3& target, const Vec3& up);

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.array().isFinite().all();
}

}  // namespace mvlift
