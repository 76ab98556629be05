#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mvlift/frame.hpp"
#include "mvlift/model.hpp"
#include "mvlift/pose.hpp"

namespace mvlift {

// Mean Euclidean joint error (mm) over joints visible in `gt`, root excluded.
double mpjpe(const Pose3D& pred, const Pose3D& gt, int root = kDefaultRoot);

struct EvalReport {
  double avg_mm = 0.0;                           // mean of per-sample MPJPE
  std::vector<std::string> joint_names;
  std::vector<std::optional<double>> per_joint_mm;  // nullopt for the root
  std::vector<int> joint_counts;
  int n_samples = 0;
  std::map<std::string, std::string> meta;
};

// Root-relative camera-frame prediction/ground-truth pairs for every view
// of every frame that has gt3d and a detected root.
struct EvalSamples {
  std::vector<Pose3D> predictions, ground_truth;
};
EvalSamples collect_samples(const Model& model, std::span<const MultiViewFrame> frames);

EvalReport report_from_samples(std::span<const Pose3D> predictions, std::span<const Pose3D> ground_truth,
                               int root = kDefaultRoot);
EvalReport per_joint_report(const Model& model, std::span<const MultiViewFrame> frames);

std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(const std::string& text);
// Two-column aligned text table, root shown as "-".
std::string report_table(const EvalReport& report);

}  // namespace mvlift
