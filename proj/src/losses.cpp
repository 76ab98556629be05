#include "mvlift/losses.hpp"

#include <cmath>

#include "mvlift/error.hpp"

namespace mvlift {

double huber(double a, double b, double delta) {
  const double d = std::abs(a - b);
  return d <= delta ? 0.5 * d * d : delta * (d - 0.5 * delta);
}

double huber_grad(double a, double b, double delta) {
  const double d = a - b;
  if (std::abs(d) <= delta) return d;
  return d > 0.0 ? delta : -delta;
}

Pose3D mean_world_pose(std::span<const Pose3D> world_poses) {
  if (world_poses.empty()) throw Error(ErrorCode::kInvalidFrame, "mean pose over zero views");
  const int nj = world_poses.front().num_joints();
  Pose3D mean(nj, Flavor::kRelative);
  for (int j = 0; j < nj; ++j) {
    Eigen::RowVector3d sum = Eigen::RowVector3d::Zero();
    int count = 0;
    for (const auto& p : world_poses) {
      if (p.num_joints() != nj) throw Error(ErrorCode::kShape, "views disagree on joint count");
      if (p.mask[j]) {
        sum += p.joints.row(j);
        ++count;
      }
    }
    mean.mask[j] = count > 0;
    if (count > 0) mean.joints.row(j) = sum / static_cast<double>(count);
  }
  return mean;
}

MultiviewLossResult multiview_loss(std::span<const Pose3D> world_preds, double delta, bool detach_mean) {
  MultiviewLossResult res;
  if (world_preds.empty()) return res;
  const Pose3D mean = mean_world_pose(world_preds);
  const int nv = static_cast<int>(world_preds.size());
  const int nj = mean.num_joints();
  res.grads.assign(nv, JointMatrix<3>::Zero(nj, 3));
  res.per_view_joint = Eigen::MatrixXd::Zero(nv, nj);

  for (int j = 0; j < nj; ++j) {
    if (!mean.mask[j]) continue;
    int count = 0;
    Eigen::RowVector3d grad_mean = Eigen::RowVector3d::Zero();
    for (int i = 0; i < nv; ++i) {
      if (!world_preds[i].mask[j]) continue;
      ++count;
      for (int c = 0; c < 3; ++c) {
        const double target = mean.joints(j, c);
        const double pred = world_preds[i].joints(j, c);
        const double term = huber(target, pred, delta);
        res.value += term;
        res.per_view_joint(i, j) += term;
        const double g = huber_grad(target, pred, delta);
        res.grads[i](j, c) -= g;
        grad_mean[c] += g;
      }
    }
    if (detach_mean) continue;
    const Eigen::RowVector3d share = grad_mean / static_cast<double>(count);
    for (int i = 0; i < nv; ++i) {
      if (world_preds[i].mask[j]) res.grads[i].row(j) += share;
    }
  }
  return res;
}

ReprojectionLossResult reprojection_loss(const Pose3D& mean_relative_world, const Vec3& root_world,
                                         std::span<const View> views, Projection projection, double delta,
                                         double z_eps) {
  if (views.empty()) throw Error(ErrorCode::kInvalidFrame, "re-projection over zero views");
  if (!all_finite(root_world)) throw Error(ErrorCode::kInvalidInput, "non-finite root position");
  const int nj = mean_relative_world.num_joints();
  const int nv = static_cast<int>(views.size());
  ReprojectionLossResult res;
  res.grad_mean = JointMatrix<3>::Zero(nj, 3);
  res.per_view_joint = Eigen::MatrixXd::Zero(nv, nj);

  for (int i = 0; i < nv; ++i) {
    const View& view = views[i];
    if (view.detections.num_joints() != nj) throw Error(ErrorCode::kShape, "view joint count mismatch");
    const Eigen::Matrix2d K2 = intrinsics_linear(view.cam.K);
    for (int j = 0; j < nj; ++j) {
      if (!mean_relative_world.mask[j] || !view.detections.mask[j]) continue;
      const Vec3 world = mean_relative_world.joints.row(j).transpose() + root_world;
      const Vec3 X = view.cam.R * world + view.cam.t;
      if (projection == Projection::kPerspective && std::abs(X.z()) <= z_eps) {
        ++res.depth_failures;
        continue;
      }
      const Vec2 pixel = apply_intrinsics(project(X, projection, z_eps), view.cam.K);
      Vec2 grad_pixel;
      for (int c = 0; c < 2; ++c) {
        const double observed = view.detections.joints(j, c);
        const double term = huber(observed, pixel[c], delta);
        res.value += term;
        res.per_view_joint(i, j) += term;
        grad_pixel[c] = -huber_grad(observed, pixel[c], delta);
      }
      const Mat23 d_pixel_d_world = K2 * projection_jacobian(X, projection, z_eps) * view.cam.R;
      res.grad_mean.row(j) += (d_pixel_d_world.transpose() * grad_pixel).transpose();
    }
  }
  return res;
}

Pose3D world_prediction(const View& view, const Eigen::Ref<const Eigen::VectorXd>& output, const NormStats& stats,
                        int root) {
  Pose3D normalized(stats.num_joints(), Flavor::kRelative);
  normalized.joints = unflatten<3>(output);
  Pose3D rel = unnormalize_3d(normalized, stats, root);
  Pose3D world = rel;
  world.frame = PoseFrame::kWorld;
  world.joints = rel.joints * view.cam.R;  // row-wise R^T x
  world.mask = view.detections.mask;
  return world;
}

TotalLossResult total_loss(std::span<const View> views, const Eigen::MatrixXd& outputs, const NormStats& stats,
                           const Vec3& root_world, const LossOptions& options) {
  if (!(options.lambda >= 0.0 && options.lambda <= 1.0)) {
    throw Error(ErrorCode::kInvalidInput, "lambda must lie in [0, 1]");
  }
  if (!(options.delta > 0.0)) throw Error(ErrorCode::kInvalidInput, "huber delta must be positive");
  if (views.empty()) throw Error(ErrorCode::kInvalidFrame, "frame has no views");
  const int nv = static_cast<int>(views.size());
  const int nj = stats.num_joints();
  if (outputs.cols() != nv || outputs.rows() != 3 * nj) {
    throw Error(ErrorCode::kShape, "network outputs do not match views x 3 N_J");
  }

  std::vector<Pose3D> world;
  world.reserve(nv);
  for (int i = 0; i < nv; ++i) world.push_back(world_prediction(views[i], outputs.col(i), stats, options.root));

  const Pose3D mean = mean_world_pose(world);
  const auto mv = multiview_loss(world, options.delta, options.detach_mean);
  const auto rp = reprojection_loss(mean, root_world, views, options.projection, options.delta, options.z_eps);

  TotalLossResult res;
  auto& b = res.breakdown;
  b.multiview = mv.value;
  b.reprojection = rp.value;
  b.total = options.lambda * mv.value + (1.0 - options.lambda) * rp.value;
  b.multiview_per_view_joint = mv.per_view_joint;
  b.reprojection_per_view_joint = rp.per_view_joint;
  b.depth_failures = rp.depth_failures;

  std::vector<int> counts(nj, 0);
  for (int j = 0; j < nj; ++j) {
    for (int i = 0; i < nv; ++i) counts[j] += world[i].mask[j] ? 1 : 0;
  }

  res.grad_outputs = Eigen::MatrixXd::Zero(3 * nj, nv);
  for (int i = 0; i < nv; ++i) {
    JointMatrix<3> grad_world = options.lambda * mv.grads[i];
    for (int j = 0; j < nj; ++j) {
      if (world[i].mask[j] && counts[j] > 0) {
        grad_world.row(j) += (1.0 - options.lambda) * rp.grad_mean.row(j) / static_cast<double>(counts[j]);
      }
    }
    // world = R^T x  =>  dL/dx = R dL/dworld; then through x = x_N * sigma + mu.
    JointMatrix<3> grad_cam = grad_world * views[i].cam.R.transpose();
    grad_cam.array() *= stats.sigma_X.array();
    if (options.root >= 0 && options.root < nj) grad_cam.row(options.root).setZero();
    res.grad_outputs.col(i) = flatten<3>(grad_cam);
  }
  return res;
}

}  // namespace mvlift
