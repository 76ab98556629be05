#pragma once

#include <cmath>
#include <functional>
#include <random>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "mvlift/frame.hpp"
#include "mvlift/geometry.hpp"

namespace testutil {

inline mvlift::Mat3 random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  return q.toRotationMatrix();
}

inline mvlift::Mat3 intrinsics(double f, double cx, double cy, double skew = 0.0) {
  mvlift::Mat3 K;
  K << f, skew, cx, 0, f, cy, 0, 0, 1;
  return K;
}

// Camera at `center` looking at the origin along a random direction.
inline mvlift::CameraParams camera_looking_at(const mvlift::Vec3& center, const mvlift::Vec3& target, double f = 1000.0) {
  mvlift::CameraParams cam;
  cam.R = mvlift::look_at_rotation(center, target, mvlift::Vec3(0, 0, 1));
  cam.t = -cam.R * center;
  cam.K = intrinsics(f, 500, 500);
  return cam;
}

inline mvlift::Vec3 random_direction(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  mvlift::Vec3 d(n(rng), n(rng), n(rng));
  return d.normalized();
}

inline mvlift::Vec2 pixel_of(const mvlift::CameraParams& cam, const mvlift::Vec3& world) {
  return mvlift::apply_intrinsics(mvlift::project_perspective(mvlift::world_to_camera(world, cam)), cam.K);
}

// Central difference of a scalar function along one coordinate.
inline double central_difference(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

inline double rel_err(double a, double b, double floor = 1e-12) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace testutil
