#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mvlift/frame.hpp"
#include "mvlift/geometry.hpp"
#include "mvlift/model.hpp"

namespace mvlift {

// Orthographic while epoch < warmup_epochs.
Projection projection_for_epoch(int epoch, int warmup_epochs);

struct EarlyStopDecision {
  bool stop = false;
  int best_epoch = -1;  // argmin, earliest on ties
};

// Stop once the metric has gone max(1, patience) epochs without a strict
// improvement on the best value so far.
EarlyStopDecision early_stop(std::span<const double> val_metrics, int patience);

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  std::string proj;  // "orthographic", "perspective", or "-" in strong mode
  double train_total = 0.0;
  double train_multiview = 0.0;
  double train_reprojection = 0.0;
  double val_metric = 0.0;
  int skipped_frames = 0;
  int depth_failures = 0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = -1;
  bool stopped_early = false;
};

struct TrainResult {
  Model model;  // best-validation checkpoint
  TrainHistory history;
};

// Called after every epoch with the current (not best) parameters.
using EpochCallback = std::function<void(const EpochRecord&, const Model&)>;

// Untrained model exactly as the training loop for config.mode starts from.
Model initial_model(std::span<const MultiViewFrame> train, const TrainConfig& config);

// Weak supervision: multi-view consistency + re-projection. gt3d is removed
// from both sets before anything else happens.
TrainResult train_weak(std::span<const MultiViewFrame> train, std::span<const MultiViewFrame> val,
                       const TrainConfig& config, const EpochCallback& on_epoch = {});

// Strong supervision against each frame's gt3d expressed in every camera.
TrainResult train_strong(std::span<const MultiViewFrame> train, std::span<const MultiViewFrame> val,
                         const TrainConfig& config, const EpochCallback& on_epoch = {});

TrainResult train(std::span<const MultiViewFrame> train, std::span<const MultiViewFrame> val,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

// Mean per-frame re-projection loss (perspective, pixels) of the averaged
// world prediction; frames without two root detections are skipped.
double weak_validation_metric(const Model& model, std::span<const MultiViewFrame> frames);
// Mean per-view MPJPE against gt3d.
double strong_validation_metric(const Model& model, std::span<const MultiViewFrame> frames);
double validation_metric(const Model& model, std::span<const MultiViewFrame> frames);

// Normalization statistics. Weak mode takes 3D statistics from triangulated
// training poses; strong mode from gt3d.
NormStats weak_norm_stats(std::span<const MultiViewFrame> frames, int root);
NormStats strong_norm_stats(std::span<const MultiViewFrame> frames, int root);

void write_history_csv(std::ostream& out, const TrainHistory& history);
void save_history_csv(const std::string& path, const TrainHistory& history);

}  // namespace mvlift
