#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "mvlift/error.hpp"

namespace mvlift {

// COCO-18 "Neck", the root joint used throughout unless configured otherwise.
inline constexpr int kDefaultRoot = 1;
inline constexpr double kSigmaFloor = 1e-6;

enum class Flavor { kAbsolute, kRelative };
enum class PoseFrame { kImage, kCamera, kWorld };

template <int D>
using JointMatrix = Eigen::Matrix<double, Eigen::Dynamic, D>;

// N_J x D joint coordinates with a per-joint visibility mask.
template <int D>
struct Pose {
  JointMatrix<D> joints;
  std::vector<bool> mask;
  Flavor flavor = Flavor::kAbsolute;
  PoseFrame frame = D == 2 ? PoseFrame::kImage : PoseFrame::kWorld;

  Pose() = default;
  explicit Pose(int num_joints, Flavor f = Flavor::kAbsolute)
      : joints(JointMatrix<D>::Zero(num_joints, D)), mask(num_joints, true), flavor(f) {}

  int num_joints() const { return static_cast<int>(joints.rows()); }
  int num_visible() const {
    int n = 0;
    for (bool m : mask) n += m ? 1 : 0;
    return n;
  }
};

using Pose2D = Pose<2>;
using Pose3D = Pose<3>;

template <int D>
Pose<D> to_relative(const Pose<D>& pose, int root) {
  if (root < 0 || root >= pose.num_joints()) {
    throw Error(ErrorCode::kInvalidInput, "root index out of range");
  }
  if (!pose.mask[root]) throw Error(ErrorCode::kMissingRoot, "root joint is not visible");
  if (pose.flavor == Flavor::kRelative) return pose;
  Pose<D> out = pose;
  const Eigen::Matrix<double, 1, D> origin = pose.joints.row(root);
  for (int j = 0; j < pose.num_joints(); ++j) {
    if (pose.mask[j]) out.joints.row(j) -= origin;
  }
  out.joints.row(root).setZero();
  out.flavor = Flavor::kRelative;
  return out;
}

// Writes 0 into every masked joint slot; the mask is kept.
template <int D>
Pose<D> fill_missing(const Pose<D>& pose) {
  Pose<D> out = pose;
  for (int j = 0; j < pose.num_joints(); ++j) {
    if (!pose.mask[j]) out.joints.row(j).setZero();
  }
  return out;
}

struct NormStats {
  JointMatrix<2> mu_x, sigma_x;
  JointMatrix<3> mu_X, sigma_X;
  // Joints that were never visible while computing stats (stats set to 0/1).
  std::vector<int> unseen_2d, unseen_3d;

  int num_joints() const { return static_cast<int>(mu_x.rows()); }
  static NormStats identity(int num_joints);
};

NormStats compute_norm_stats(std::span<const Pose2D> poses2d, std::span<const Pose3D> poses3d);

Pose2D normalize_2d(const Pose2D& x, const NormStats& stats);
Pose3D normalize_3d(const Pose3D& X, const NormStats& stats);
// X_N * sigma + mu with the root channel zeroed afterwards. The returned pose
// is a camera-frame relative pose with all joints marked visible.
Pose3D unnormalize_3d(const Pose3D& X_N, const NormStats& stats, int root = kDefaultRoot);

// Row-major flattening: [x0, y0, (z0,) x1, ...].
template <int D>
Eigen::VectorXd flatten(const JointMatrix<D>& joints) {
  Eigen::VectorXd v(joints.rows() * D);
  for (Eigen::Index j = 0; j < joints.rows(); ++j) {
    for (int c = 0; c < D; ++c) v[j * D + c] = joints(j, c);
  }
  return v;
}

template <int D>
JointMatrix<D> unflatten(const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (v.size() % D != 0) throw Error(ErrorCode::kShape, "flat pose length not divisible by dimension");
  JointMatrix<D> joints(v.size() / D, D);
  for (Eigen::Index j = 0; j < joints.rows(); ++j) {
    for (int c = 0; c < D; ++c) joints(j, c) = v[j * D + c];
  }
  return joints;
}

}  // namespace mvlift
