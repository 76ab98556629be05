#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mvlift/frame.hpp"

namespace mvlift {

inline constexpr int kCocoJoints = 18;

// OpenPose COCO-18 order.
const std::array<std::string, kCocoJoints>& coco_joint_names();
std::string joint_name(int joint, int num_joints);

// Segment lengths and head offsets of the synthetic skeleton (mm), roughly
// those of a 1.75 m adult.
struct BoneLengths {
  double shoulder_half_width = 180.0;
  double upper_arm = 290.0;
  double forearm = 255.0;
  double torso = 520.0;  // neck to hip centre
  double hip_half_width = 95.0;
  double thigh = 430.0;
  double shin = 420.0;
  double nose_up = 200.0, nose_forward = 80.0;
  double eye_up = 235.0, eye_forward = 70.0, eye_half_width = 35.0;
  double ear_up = 210.0, ear_back = 10.0, ear_half_width = 75.0;
};

struct SynthConfig {
  int frames = 200;
  int cameras = 4;
  int sequence_length = 50;        // frames per sequence id
  double ring_radius = 3000.0;     // mm
  double camera_height = 1500.0;   // mm
  double focal = 1000.0;           // px
  double cx = 500.0, cy = 500.0;   // px
  Vec3 volume_center{0.0, 0.0, 1300.0};
  double volume_size = 1000.0;     // edge of the cube holding the root joint
  BoneLengths bones;
  double noise_px = 0.0;
  double drop_prob = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

// Cameras evenly spaced on a horizontal ring, each looking at the volume centre.
std::vector<CameraParams> ring_cameras(const SynthConfig& config);

// One articulated COCO-18 pose (absolute world, mm) with the neck inside the
// configured volume.
Pose3D sample_pose(const SynthConfig& config, std::mt19937_64& rng);

// Frames with exact projections + Gaussian pixel noise + Bernoulli joint
// dropping; gt3d holds the generating pose. Deterministic in config.seed.
std::vector<MultiViewFrame> synth_generate(const SynthConfig& config);

}  // namespace mvlift
