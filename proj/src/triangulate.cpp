#include "mvlift/triangulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "mvlift/error.hpp"

namespace mvlift {

namespace {

std::vector<const Observation*> usable(std::span<const Observation> observations) {
  std::vector<const Observation*> out;
  for (const auto& o : observations) {
    if (!all_finite(o.pixel)) throw Error(ErrorCode::kInvalidInput, "non-finite pixel observation");
    if (o.confidence > 0.0) out.push_back(&o);
  }
  return out;
}

double condition_number(const Eigen::MatrixXd& A) {
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(s.size() - 1) <= 0.0) return std::numeric_limits<double>::infinity();
  return s(0) / s(s.size() - 1);
}

Vec2 normalized_coords(const Observation& o) {
  const Vec3 p = o.cam.K.triangularView<Eigen::Upper>().solve(Vec3(o.pixel.x(), o.pixel.y(), 1.0));
  return {p.x(), p.y()};
}

// Depth at which each camera's affine approximation is taken: the point
// closest to all optical axes when the rig converges, else the world origin.
std::vector<double> reference_depths(const std::vector<const Observation*>& obs) {
  Mat3 A = Mat3::Zero();
  Vec3 b = Vec3::Zero();
  for (const auto* o : obs) {
    const Vec3 axis = o->cam.R.row(2).transpose();
    const Mat3 P = Mat3::Identity() - axis * axis.transpose();
    A += P;
    b += P * o->cam.center();
  }
  Vec3 anchor = Vec3::Zero();
  if (condition_number(A) < 1e8) anchor = A.ldlt().solve(b);
  std::vector<double> depths;
  for (const auto* o : obs) {
    const double z = o->cam.R.row(2).dot(anchor) + o->cam.t.z();
    depths.push_back(z > 1.0 ? z : 1000.0);
  }
  return depths;
}

}  // namespace

double reprojection_distance(const Observation& obs, const Vec3& point) {
  const Vec3 X = world_to_camera(point, obs.cam);
  if (std::abs(X.z()) <= kZEpsilon) return std::numeric_limits<double>::infinity();
  return (apply_intrinsics(project_perspective(X), obs.cam.K) - obs.pixel).norm();
}

TriangulatedPoint triangulate_point(std::span<const Observation> observations, const TriangulationOptions& options) {
  const auto obs = usable(observations);
  if (obs.size() < 2) {
    throw Error(ErrorCode::kInsufficientViews, "triangulation needs at least two observations, got " +
                                                   std::to_string(obs.size()));
  }
  const auto n = static_cast<Eigen::Index>(obs.size());

  // Stage 1: affine cameras, x_cam,xy = p * Z_ref, linear in the world point.
  const auto depths = reference_depths(obs);
  Eigen::MatrixXd A(2 * n, 3);
  Eigen::VectorXd rhs(2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& o = *obs[i];
    const Vec2 p = normalized_coords(o);
    const double w = o.confidence;
    for (int c = 0; c < 2; ++c) {
      A.row(2 * i + c) = w * o.cam.R.row(c);
      rhs(2 * i + c) = w * (p[c] * depths[i] - o.cam.t[c]);
    }
  }
  if (condition_number(A) > options.max_condition) {
    throw Error(ErrorCode::kDegenerateConfiguration, "affine triangulation system is rank deficient");
  }
  TriangulatedPoint res;
  res.affine_estimate = A.colPivHouseholderQr().solve(rhs);

  // Stage 2: Gauss-Newton on weighted pixel residuals.
  auto cost_at = [&](const Vec3& W) {
    double cost = 0.0;
    for (const auto* o : obs) {
      const Vec3 X = o->cam.R * W + o->cam.t;
      if (X.z() <= options.z_eps) return std::numeric_limits<double>::infinity();
      const Vec2 r = apply_intrinsics(Vec2(X.x() / X.z(), X.y() / X.z()), o->cam.K) - o->pixel;
      cost += o->confidence * o->confidence * r.squaredNorm();
    }
    return cost;
  };

  Vec3 W = res.affine_estimate;
  double cost = cost_at(W);
  if (!std::isfinite(cost)) {
    throw Error(ErrorCode::kDegenerateConfiguration, "affine estimate lies behind a camera");
  }
  bool checked_condition = false;
  for (int it = 0; it < options.max_iterations; ++it) {
    Eigen::MatrixXd J(2 * n, 3);
    Eigen::VectorXd r(2 * n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& o = *obs[i];
      const Vec3 X = o.cam.R * W + o.cam.t;
      const Vec2 pix = apply_intrinsics(project_perspective(X, options.z_eps), o.cam.K);
      r.segment<2>(2 * i) = o.confidence * (pix - o.pixel);
      J.middleRows<2>(2 * i) = o.confidence * intrinsics_linear(o.cam.K) * perspective_jacobian(X, options.z_eps) * o.cam.R;
    }
    if (!checked_condition) {
      if (condition_number(J) > options.max_condition) {
        throw Error(ErrorCode::kDegenerateConfiguration, "viewing rays do not constrain the point");
      }
      checked_condition = true;
    }
    const Vec3 step = -(J.transpose() * J).ldlt().solve(J.transpose() * r);
    res.iterations = it + 1;

    double scale = 1.0;
    bool accepted = false;
    for (int h = 0; h <= options.max_halvings; ++h, scale *= 0.5) {
      const Vec3 candidate = W + scale * step;
      const double c = cost_at(candidate);
      if (c <= cost) {
        W = candidate;
        cost = c;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      res.converged = step.norm() < options.step_tolerance;
      break;
    }
    if (scale * step.norm() < options.step_tolerance) {
      res.converged = true;
      break;
    }
  }

  res.point = W;
  double sq = 0.0;
  for (const auto* o : obs) {
    const double d = reprojection_distance(*o, W);
    sq += d * d;
    res.max_residual = std::max(res.max_residual, d);
  }
  res.rms_residual = std::sqrt(sq / static_cast<double>(n));
  return res;
}

std::vector<Observation> joint_observations(const MultiViewFrame& frame, int joint) {
  std::vector<Observation> obs;
  for (const auto& v : frame.views) {
    if (joint >= v.detections.num_joints() || !v.detections.mask[joint]) continue;
    const double conf = v.conf.empty() ? 1.0 : v.conf[joint];
    if (conf <= 0.0) continue;
    obs.push_back({v.cam, v.detections.joints.row(joint).transpose(), conf});
  }
  return obs;
}

PoseReconstruction triangulate_pose(const MultiViewFrame& frame, const TriangulationOptions& options) {
  const int nj = frame.num_joints();
  PoseReconstruction rec;
  rec.pose = Pose3D(nj, Flavor::kAbsolute);
  rec.pose.frame = PoseFrame::kWorld;
  rec.rms_residuals.assign(nj, 0.0);
  rec.max_residuals.assign(nj, 0.0);
  rec.converged.assign(nj, false);
  int reconstructed = 0;
  for (int j = 0; j < nj; ++j) {
    const auto obs = joint_observations(frame, j);
    rec.pose.mask[j] = false;
    if (obs.size() < 2) continue;
    try {
      const auto p = triangulate_point(obs, options);
      rec.pose.joints.row(j) = p.point.transpose();
      rec.pose.mask[j] = true;
      rec.rms_residuals[j] = p.rms_residual;
      rec.max_residuals[j] = p.max_residual;
      rec.converged[j] = p.converged;
      ++reconstructed;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDegenerateConfiguration) throw;
      ++rec.degenerate_joints;
    }
  }
  if (reconstructed == 0) {
    throw Error(ErrorCode::kEmptyReconstruction,
                "no joint of frame " + frame.seq + "/" + std::to_string(frame.frame) + " could be triangulated");
  }
  return rec;
}

Vec3 reconstruct_root(const MultiViewFrame& frame, int root, const TriangulationOptions& options) {
  if (root < 0 || root >= frame.num_joints()) throw Error(ErrorCode::kInvalidInput, "root index out of range");
  const auto obs = joint_observations(frame, root);
  return triangulate_point(obs, options).point;
}

}  // namespace mvlift
