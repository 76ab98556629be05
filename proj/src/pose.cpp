#include "mvlift/pose.hpp"

#include <algorithm>
#include <cmath>

namespace mvlift {

NormStats NormStats::identity(int num_joints) {
  NormStats s;
  s.mu_x = JointMatrix<2>::Zero(num_joints, 2);
  s.sigma_x = JointMatrix<2>::Ones(num_joints, 2);
  s.mu_X = JointMatrix<3>::Zero(num_joints, 3);
  s.sigma_X = JointMatrix<3>::Ones(num_joints, 3);
  return s;
}

namespace {

// Per-joint population mean/std over visible entries.
template <int D>
void masked_moments(std::span<const Pose<D>> poses, JointMatrix<D>& mu, JointMatrix<D>& sigma,
                    std::vector<int>& unseen) {
  const int nj = poses.front().num_joints();
  mu = JointMatrix<D>::Zero(nj, D);
  sigma = JointMatrix<D>::Ones(nj, D);
  for (int j = 0; j < nj; ++j) {
    long count = 0;
    Eigen::Matrix<double, 1, D> sum = Eigen::Matrix<double, 1, D>::Zero();
    for (const auto& p : poses) {
      if (p.num_joints() != nj) throw Error(ErrorCode::kShape, "inconsistent joint count");
      if (p.mask[j]) {
        sum += p.joints.row(j);
        ++count;
      }
    }
    if (count == 0) {
      unseen.push_back(j);
      continue;
    }
    const Eigen::Matrix<double, 1, D> mean = sum / static_cast<double>(count);
    Eigen::Matrix<double, 1, D> sq = Eigen::Matrix<double, 1, D>::Zero();
    for (const auto& p : poses) {
      if (p.mask[j]) sq += (p.joints.row(j) - mean).array().square().matrix();
    }
    mu.row(j) = mean;
    sigma.row(j) = (sq / static_cast<double>(count)).array().sqrt().max(kSigmaFloor).matrix();
  }
}

}  // namespace

NormStats compute_norm_stats(std::span<const Pose2D> poses2d, std::span<const Pose3D> poses3d) {
  if (poses2d.empty() || poses3d.empty()) {
    throw Error(ErrorCode::kEmptyDataset, "cannot compute normalization statistics from no poses");
  }
  if (poses2d.front().num_joints() != poses3d.front().num_joints()) {
    throw Error(ErrorCode::kShape, "2D and 3D poses disagree on joint count");
  }
  NormStats s;
  masked_moments<2>(poses2d, s.mu_x, s.sigma_x, s.unseen_2d);
  masked_moments<3>(poses3d, s.mu_X, s.sigma_X, s.unseen_3d);
  return s;
}

Pose2D normalize_2d(const Pose2D& x, const NormStats& stats) {
  if (x.flavor != Flavor::kRelative) throw Error(ErrorCode::kInvalidInput, "normalize_2d expects a relative pose");
  if (x.num_joints() != stats.num_joints()) throw Error(ErrorCode::kShape, "joint count mismatch");
  Pose2D out = x;
  out.joints = ((x.joints - stats.mu_x).array() / stats.sigma_x.array()).matrix();
  return fill_missing(out);
}

Pose3D normalize_3d(const Pose3D& X, const NormStats& stats) {
  if (X.num_joints() != stats.num_joints()) throw Error(ErrorCode::kShape, "joint count mismatch");
  Pose3D out = X;
  out.joints = ((X.joints - stats.mu_X).array() / stats.sigma_X.array()).matrix();
  return fill_missing(out);
}

Pose3D unnormalize_3d(const Pose3D& X_N, const NormStats& stats, int root) {
  if (X_N.num_joints() != stats.num_joints()) throw Error(ErrorCode::kShape, "joint count mismatch");
  Pose3D out(X_N.num_joints(), Flavor::kRelative);
  out.frame = PoseFrame::kCamera;
  out.joints = (X_N.joints.array() * stats.sigma_X.array() + stats.mu_X.array()).matrix();
  if (root >= 0 && root < out.num_joints()) out.joints.row(root).setZero();
  return out;
}

}  // namespace mvlift
