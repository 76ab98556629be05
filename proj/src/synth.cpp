#include "mvlift/synth.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

#include <Eigen/Geometry>

#include "mvlift/error.hpp"

namespace mvlift {

namespace {

enum Joint {
  kNose, kNeck, kRShoulder, kRElbow, kRWrist, kLShoulder, kLElbow, kLWrist,
  kRHip, kRKnee, kRAnkle, kLHip, kLKnee, kLAnkle, kREye, kLEye, kREar, kLEar,
};

double deg(double d) { return d * std::numbers::pi / 180.0; }

struct Limb {
  Vec3 first, second;  // unit directions of the proximal and distal segment
};

// Proximal direction from flexion (towards `forward`) and abduction (towards
// `side`), measured from hanging straight down. The distal segment bends by
// `bend` inside the flexion plane, towards +forward_bend, after twisting that
// plane by `twist` about the proximal segment.
Limb articulate(const Vec3& up, const Vec3& forward, const Vec3& side, double flexion, double abduction,
                double twist, double bend, double bend_sign) {
  const Vec3 in_plane = -std::cos(flexion) * up + std::sin(flexion) * forward;
  const Vec3 proximal = (std::cos(abduction) * in_plane + std::sin(abduction) * side).normalized();
  const Vec3 flex_tangent = std::cos(flexion) * forward + std::sin(flexion) * up;
  Vec3 bend_dir = (flex_tangent - flex_tangent.dot(proximal) * proximal).normalized();
  bend_dir = Eigen::AngleAxisd(twist, proximal) * bend_dir;
  const Vec3 distal = std::cos(bend) * proximal + bend_sign * std::sin(bend) * bend_dir;
  return {proximal, distal.normalized()};
}

}  // namespace

const std::array<std::string, kCocoJoints>& coco_joint_names() {
  static const std::array<std::string, kCocoJoints> names = {
      "Nose",   "Neck",   "R. Shoulder", "R. Elbow", "R. Wrist", "L. Shoulder", "L. Elbow", "L. Wrist", "R. Hip",
      "R. Knee", "R. Ankle", "L. Hip",    "L. Knee",  "L. Ankle", "R. Eye",      "L. Eye",   "R. Ear",   "L. Ear"};
  return names;
}

std::string joint_name(int joint, int num_joints) {
  if (num_joints == kCocoJoints && joint >= 0 && joint < kCocoJoints) return coco_joint_names()[joint];
  return "joint_" + std::to_string(joint);
}

void SynthConfig::validate() const {
  if (frames < 1 || cameras < 1 || cameras > 512 || sequence_length < 1) {
    throw Error(ErrorCode::kInvalidInput, "synth counts must be >= 1 (cameras <= 512)");
  }
  if (!(ring_radius > 0 && focal > 0 && volume_size > 0)) {
    throw Error(ErrorCode::kInvalidInput, "synth distances and focal length must be positive");
  }
  if (!(noise_px >= 0)) throw Error(ErrorCode::kInvalidInput, "noise must be >= 0");
  if (!(drop_prob >= 0 && drop_prob < 1)) throw Error(ErrorCode::kInvalidInput, "drop probability must be in [0, 1)");
}

std::vector<CameraParams> ring_cameras(const SynthConfig& config) {
  std::vector<CameraParams> cams;
  for (int c = 0; c < config.cameras; ++c) {
    const double phi = 2.0 * std::numbers::pi * c / config.cameras;
    const Vec3 center(config.ring_radius * std::cos(phi), config.ring_radius * std::sin(phi), config.camera_height);
    CameraParams cam;
    cam.R = look_at_rotation(center, config.volume_center, Vec3::UnitZ());
    cam.t = -cam.R * center;
    cam.K << config.focal, 0.0, config.cx,
             0.0, config.focal, config.cy,
             0.0, 0.0, 1.0;
    char id[16];
    std::snprintf(id, sizeof id, "cam%02d", c);
    cam.cam_id = id;
    cams.push_back(cam);
  }
  return cams;
}

Pose3D sample_pose(const SynthConfig& config, std::mt19937_64& rng) {
  auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  const auto& b = config.bones;

  const double half = 0.5 * config.volume_size;
  const Vec3 neck = config.volume_center + Vec3(uniform(-half, half), uniform(-half, half), uniform(-half, half));

  // Body axes: forward, left, up, after yaw then lean.
  const Mat3 body = (Eigen::AngleAxisd(uniform(0.0, 2.0 * std::numbers::pi), Vec3::UnitZ()) *
                     Eigen::AngleAxisd(uniform(deg(-10), deg(30)), Vec3::UnitY()) *
                     Eigen::AngleAxisd(uniform(deg(-10), deg(10)), Vec3::UnitX()))
                        .toRotationMatrix();
  const Vec3 forward = body.col(0), left = body.col(1), up = body.col(2);

  Pose3D pose(kCocoJoints, Flavor::kAbsolute);
  pose.frame = PoseFrame::kWorld;
  auto set = [&](int j, const Vec3& p) { pose.joints.row(j) = p.transpose(); };

  set(kNeck, neck);
  const Mat3 head = (Eigen::AngleAxisd(uniform(deg(-45), deg(45)), up) *
                     Eigen::AngleAxisd(uniform(deg(-20), deg(30)), left))
                        .toRotationMatrix();
  const Vec3 hf = head * forward, hl = head * left, hu = head * up;
  set(kNose, neck + b.nose_up * hu + b.nose_forward * hf);
  set(kREye, neck + b.eye_up * hu + b.eye_forward * hf - b.eye_half_width * hl);
  set(kLEye, neck + b.eye_up * hu + b.eye_forward * hf + b.eye_half_width * hl);
  set(kREar, neck + b.ear_up * hu - b.ear_back * hf - b.ear_half_width * hl);
  set(kLEar, neck + b.ear_up * hu - b.ear_back * hf + b.ear_half_width * hl);

  for (int side = 0; side < 2; ++side) {
    const double s = side == 0 ? -1.0 : 1.0;  // right, left
    const Vec3 outward = s * left;
    const Vec3 shoulder = neck + b.shoulder_half_width * outward;
    const Limb arm = articulate(up, forward, outward, uniform(deg(10), deg(90)), uniform(deg(10), deg(60)),
                                uniform(deg(0), deg(45)), uniform(deg(20), deg(110)), 1.0);
    const Vec3 elbow = shoulder + b.upper_arm * arm.first;
    set(side == 0 ? kRShoulder : kLShoulder, shoulder);
    set(side == 0 ? kRElbow : kLElbow, elbow);
    set(side == 0 ? kRWrist : kLWrist, elbow + b.forearm * arm.second);

    const Vec3 hip = neck - b.torso * up + b.hip_half_width * outward;
    const Limb leg = articulate(up, forward, outward, uniform(deg(5), deg(60)), uniform(deg(5), deg(25)),
                                uniform(deg(-10), deg(10)), uniform(deg(10), deg(90)), -1.0);
    const Vec3 knee = hip + b.thigh * leg.first;
    set(side == 0 ? kRHip : kLHip, hip);
    set(side == 0 ? kRKnee : kLKnee, knee);
    set(side == 0 ? kRAnkle : kLAnkle, knee + b.shin * leg.second);
  }
  return pose;
}

std::vector<MultiViewFrame> synth_generate(const SynthConfig& config) {
  config.validate();
  const auto cams = ring_cameras(config);
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  std::vector<MultiViewFrame> frames;
  frames.reserve(config.frames);
  for (int f = 0; f < config.frames; ++f) {
    MultiViewFrame frame;
    char seq[32];
    std::snprintf(seq, sizeof seq, "seq%03d", f / config.sequence_length);
    frame.seq = seq;
    frame.frame = f % config.sequence_length;
    const Pose3D gt = sample_pose(config, rng);
    for (const auto& cam : cams) {
      View v;
      v.cam = cam;
      v.detections = Pose2D(gt.num_joints(), Flavor::kAbsolute);
      v.conf.assign(gt.num_joints(), 1.0);
      for (int j = 0; j < gt.num_joints(); ++j) {
        Vec2 px = apply_intrinsics(project_perspective(world_to_camera(gt.joints.row(j).transpose(), cam)), cam.K);
        if (config.noise_px > 0.0) {
          px.x() += config.noise_px * noise(rng);
          px.y() += config.noise_px * noise(rng);
        }
        v.detections.joints.row(j) = px.transpose();
        if (config.drop_prob > 0.0 && unif(rng) < config.drop_prob) {
          v.detections.mask[j] = false;
          v.detections.joints.row(j).setZero();
          v.conf[j] = 0.0;
        }
      }
      frame.views.push_back(std::move(v));
    }
    frame.gt3d = gt;
    frames.push_back(std::move(frame));
  }
  return frames;
}

}  // namespace mvlift
