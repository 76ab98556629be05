#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Core>

#include "mvlift/frame.hpp"
#include "mvlift/geometry.hpp"
#include "mvlift/net.hpp"
#include "mvlift/pose.hpp"

namespace mvlift {

enum class TrainMode { kWeak, kStrong };

const char* to_string(TrainMode m);
TrainMode train_mode_from_string(const std::string& s);

struct TrainConfig {
  TrainMode mode = TrainMode::kWeak;
  double lambda = 0.8;
  double alpha0 = 5e-4;
  double gamma = 0.96;
  int epochs = 100;
  int frames_per_batch = 8;
  int views_per_frame = 16;
  int hidden_dim = 1024;
  double dropout = 0.5;
  double weight_decay = 1e-4;
  double huber_delta = 1.0;
  int warmup_epochs = 5;
  int patience = 10;
  int root = kDefaultRoot;
  std::uint64_t seed = 0;
  double bn_momentum = 0.1;
  bool detach_mean = false;
  bool cache_root = false;
  // Multiplies the Xavier-initialised output layer; values near 0 start the
  // network at the mean pose.
  double output_init_scale = 1.0;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

struct Model {
  MLPParams params;
  NormStats stats;
  TrainConfig config;
};

Architecture architecture_for(const TrainConfig& config, int num_joints);

// Normalized, root-relative, zero-filled 2D input of one view (2 N_J).
// Throws kMissingRoot when the view did not detect the root joint.
Eigen::VectorXd model_input(const View& view, const NormStats& stats, int root);

// Eval-mode prediction: camera-frame relative 3D pose in mm.
Pose3D predict_relative(const Model& model, const View& view);

// Ground-truth pose of `frame` expressed relative to the root in `cam`.
Pose3D camera_relative(const Pose3D& world_abs, const CameraParams& cam, int root);

std::string config_to_json(const TrainConfig& config);
TrainConfig config_from_json(const std::string& text);
TrainConfig load_config(const std::string& path);

std::string model_to_json(const Model& model);
Model model_from_json(const std::string& text);
void save_model(const std::string& path, const Model& model);
Model load_model(const std::string& path);

}  // namespace mvlift
