#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mvlift/geometry.hpp"
#include "mvlift/pose.hpp"

namespace mvlift {

// One calibrated camera and the absolute 2D detections it produced.
struct View {
  CameraParams cam;
  Pose2D detections;          // pixels, absolute; mask == detected
  std::vector<double> conf;   // per-joint detector confidence in [0, 1]
};

struct MultiViewFrame {
  std::string seq;
  std::int64_t frame = 0;
  std::vector<View> views;
  std::optional<Pose3D> gt3d;  // absolute world pose (mm)

  int num_joints() const { return views.empty() ? 0 : views.front().detections.num_joints(); }
};

}  // namespace mvlift
