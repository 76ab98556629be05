#pragma once

#include <span>
#include <vector>

#include "mvlift/frame.hpp"
#include "mvlift/geometry.hpp"
#include "mvlift/pose.hpp"

namespace mvlift {

struct Observation {
  CameraParams cam;
  Vec2 pixel;
  double confidence = 1.0;  // row weight; 0 excludes the observation
};

struct TriangulationOptions {
  int max_iterations = 50;
  double step_tolerance = 1e-6;  // mm
  int max_halvings = 10;
  double max_condition = 1e8;
  double z_eps = kZEpsilon;
};

struct TriangulatedPoint {
  Vec3 point = Vec3::Zero();
  Vec3 affine_estimate = Vec3::Zero();  // closed-form first stage
  double rms_residual = 0.0;            // pixels, over used observations
  double max_residual = 0.0;            // pixels, worst single view
  int iterations = 0;
  bool converged = false;
};

// Closed-form affine-camera least squares followed by Gauss-Newton on the
// perspective pixel re-projection error. Throws kInsufficientViews with
// fewer than two weighted observations and kDegenerateConfiguration when
// the viewing geometry does not pin down the point.
TriangulatedPoint triangulate_point(std::span<const Observation> observations,
                                    const TriangulationOptions& options = {});

// Pixel re-projection distance of `point` in one observation's camera.
double reprojection_distance(const Observation& obs, const Vec3& point);

struct PoseReconstruction {
  Pose3D pose;                      // absolute world pose
  std::vector<double> rms_residuals;
  std::vector<double> max_residuals;
  std::vector<bool> converged;
  int degenerate_joints = 0;
};

std::vector<Observation> joint_observations(const MultiViewFrame& frame, int joint);

// Independent per-joint triangulation; joints seen by fewer than two views
// (or in degenerate geometry) are masked out.
PoseReconstruction triangulate_pose(const MultiViewFrame& frame, const TriangulationOptions& options = {});

Vec3 reconstruct_root(const MultiViewFrame& frame, int root, const TriangulationOptions& options = {});

}  // namespace mvlift
