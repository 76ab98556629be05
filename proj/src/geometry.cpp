#include "mvlift/geometry.hpp"

#include <cmath>

#include <Eigen/Geometry>

#include "mvlift/error.hpp"

namespace mvlift {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidInput: return "invalid input";
    case ErrorCode::kDegenerateDepth: return "degenerate depth";
    case ErrorCode::kMissingRoot: return "missing root";
    case ErrorCode::kEmptyDataset: return "empty dataset";
    case ErrorCode::kShape: return "shape mismatch";
    case ErrorCode::kState: return "invalid state";
    case ErrorCode::kInvalidFrame: return "invalid frame";
    case ErrorCode::kInsufficientViews: return "insufficient views";
    case ErrorCode::kDegenerateConfiguration: return "degenerate configuration";
    case ErrorCode::kEmptyReconstruction: return "empty reconstruction";
    case ErrorCode::kInsufficientSequences: return "insufficient sequences";
    case ErrorCode::kParse: return "parse error";
    case ErrorCode::kUndefinedMetric: return "undefined metric";
    case ErrorCode::kTraining: return "training error";
    case ErrorCode::kIo: return "io error";
  }
  return "unknown error";
}

const char* to_string(Projection p) {
  return p == Projection::kOrthographic ? "orthographic" : "perspective";
}

Projection projection_from_string(const std::string& s) {
  if (s == "orthographic" || s == "ortho") return Projection::kOrthographic;
  if (s == "perspective") return Projection::kPerspective;
  throw Error(ErrorCode::kInvalidInput, "unknown projection '" + s + "'");
}

void CameraParams::validate() const {
  if (!all_finite(R) || !all_finite(t) || !all_finite(K)) {
    throw Error(ErrorCode::kInvalidInput, "camera '" + cam_id + "' has non-finite entries");
  }
  const Mat3 gram = R.transpose() * R;
  if ((gram - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-9 ||
      std::abs(R.determinant() - 1.0) > 1e-9) {
    throw Error(ErrorCode::kInvalidInput, "camera '" + cam_id + "' rotation is not orthonormal");
  }
  if (K(2, 2) != 1.0 || K(1, 0) != 0.0 || K(2, 0) != 0.0 || K(2, 1) != 0.0) {
    throw Error(ErrorCode::kInvalidInput,
                "camera '" + cam_id + "' intrinsics are not upper-triangular with K[2][2]=1");
  }
}

Vec3 world_to_camera(const Vec3& world, const CameraParams& cam) {
  if (!all_finite(world)) throw Error(ErrorCode::kInvalidInput, "non-finite world point");
  return cam.R * world + cam.t;
}

Vec3 camera_to_world_relative(const Vec3& rel, const CameraParams& cam) {
  if (!all_finite(rel)) throw Error(ErrorCode::kInvalidInput, "non-finite camera point");
  return cam.R.transpose() * rel;
}

Vec2 project_perspective(const Vec3& X, double z_eps) {
  if (!all_finite(X)) throw Error(ErrorCode::kInvalidInput, "non-finite point");
  if (std::abs(X.z()) <= z_eps) {
    throw Error(ErrorCode::kDegenerateDepth, "depth " + std::to_string(X.z()) + " at or below epsilon");
  }
  return {X.x() / X.z(), X.y() / X.z()};
}

Vec2 project_orthographic(const Vec3& X) {
  if (!all_finite(X)) throw Error(ErrorCode::kInvalidInput, "non-finite point");
  return {X.x(), X.y()};
}

Vec2 project(const Vec3& X, Projection mode, double z_eps) {
  return mode == Projection::kPerspective ? project_perspective(X, z_eps) : project_orthographic(X);
}

Vec2 apply_intrinsics(const Vec2& p, const Mat3& K) {
  return {K(0, 0) * p.x() + K(0, 1) * p.y() + K(0, 2), K(1, 1) * p.y() + K(1, 2)};
}

Mat23 perspective_jacobian(const Vec3& X, double z_eps) {
  if (!all_finite(X)) throw Error(ErrorCode::kInvalidInput, "non-finite point");
  if (std::abs(X.z()) <= z_eps) {
    throw Error(ErrorCode::kDegenerateDepth, "depth " + std::to_string(X.z()) + " at or below epsilon");
  }
  const double inv_z = 1.0 / X.z();
  Mat23 J;
  J << inv_z, 0.0, -X.x() * inv_z * inv_z,
       0.0, inv_z, -X.y() * inv_z * inv_z;
  return J;
}

Mat23 projection_jacobian(const Vec3& X, Projection mode, double z_eps) {
  if (mode == Projection::kPerspective) return perspective_jacobian(X, z_eps);
  Mat23 J;
  J << 1.0, 0.0, 0.0,
       0.0, 1.0, 0.0;
  return J;
}

Eigen::Matrix2d intrinsics_linear(const Mat3& K) { return K.topLeftCorner<2, 2>(); }

Mat3 rotation_x(double radians) {
  return Eigen::AngleAxisd(radians, Vec3::UnitX()).toRotationMatrix();
}

Mat3 rotation_y(double radians) {
  return Eigen::AngleAxisd(radians, Vec3::UnitY()).toRotationMatrix();
}

Mat3 rotation_z(double radians) {
  return Eigen::AngleAxisd(radians, Vec3::UnitZ()).toRotationMatrix();
}

Mat3 look_at_rotation(const Vec3& center, const Vec3& target, const Vec3& up) {
  const Vec3 forward = (target - center).normalized();
  Vec3 right = forward.cross(up);
  if (right.norm() < 1e-12) {
    throw Error(ErrorCode::kInvalidInput, "look-at direction parallel to up vector");
  }
  right.normalize();
  const Vec3 down = forward.cross(right).normalized();
  Mat3 R;
  R.row(0) = right.transpose();
  R.row(1) = down.transpose();
  R.row(2) = forward.transpose();
  return R;
}

}  // namespace mvlift
