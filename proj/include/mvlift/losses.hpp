#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "mvlift/frame.hpp"
#include "mvlift/geometry.hpp"
#include "mvlift/pose.hpp"

namespace mvlift {

// Smooth-L1 / Huber on the scalar difference a - b.
double huber(double a, double b, double delta);
// d huber / d a. At |a - b| == delta both branches give delta * sign(a - b).
double huber_grad(double a, double b, double delta);

// Per-joint mean over the views in which that joint is visible. Joints seen
// by no view come back as 0 with mask == false.
Pose3D mean_world_pose(std::span<const Pose3D> world_poses);

struct MultiviewLossResult {
  double value = 0.0;
  std::vector<JointMatrix<3>> grads;  // d L_M / d prediction, one per view
  Eigen::MatrixXd per_view_joint;     // views x joints
};

// Elementwise Huber between each view's world-frame prediction and the
// per-joint mean over views. Unless `detach_mean`, the gradient includes the
// path through the mean.
MultiviewLossResult multiview_loss(std::span<const Pose3D> world_preds, double delta,
                                   bool detach_mean = false);

struct ReprojectionLossResult {
  double value = 0.0;
  JointMatrix<3> grad_mean;       // d L_R / d mean relative world pose
  Eigen::MatrixXd per_view_joint; // views x joints
  int depth_failures = 0;         // (view, joint) terms dropped for z <= z_eps
};

// Adds `root_world` to the mean relative pose, moves it into every camera,
// projects, applies K and compares against the view's detections with
// elementwise Huber over joints visible in both.
ReprojectionLossResult reprojection_loss(const Pose3D& mean_relative_world, const Vec3& root_world,
                                         std::span<const View> views, Projection projection, double delta,
                                         double z_eps = kZEpsilon);

struct LossOptions {
  double lambda = 0.8;
  double delta = 1.0;
  Projection projection = Projection::kPerspective;
  bool detach_mean = false;
  int root = kDefaultRoot;
  double z_eps = kZEpsilon;
};

struct LossBreakdown {
  double multiview = 0.0;     // L_M
  double reprojection = 0.0;  // L_R
  double total = 0.0;         // lambda * L_M + (1 - lambda) * L_R
  Eigen::MatrixXd multiview_per_view_joint;
  Eigen::MatrixXd reprojection_per_view_joint;
  int depth_failures = 0;
};

struct TotalLossResult {
  LossBreakdown breakdown;
  Eigen::MatrixXd grad_outputs;  // (3 N_J) x views, w.r.t. normalized network outputs
};

// `outputs` holds one normalized network output (3 N_J) per column, in the
// order of `views`. Predictions are unnormalized, root-zeroed and rotated to
// the world before both losses are evaluated.
TotalLossResult total_loss(std::span<const View> views, const Eigen::MatrixXd& outputs, const NormStats& stats,
                           const Vec3& root_world, const LossOptions& options);

// Camera-frame relative prediction of one view, rotated into the world frame,
// with the view's detection mask attached.
Pose3D world_prediction(const View& view, const Eigen::Ref<const Eigen::VectorXd>& output, const NormStats& stats,
                        int root);

}  // namespace mvlift
