#include "mvlift/eval.hpp"

#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "mvlift/error.hpp"
#include "mvlift/synth.hpp"

namespace mvlift {

using ojson = nlohmann::ordered_json;

double mpjpe(const Pose3D& pred, const Pose3D& gt, int root) {
  if (pred.num_joints() != gt.num_joints()) throw Error(ErrorCode::kShape, "pose joint counts differ");
  double sum = 0.0;
  int n = 0;
  for (int j = 0; j < gt.num_joints(); ++j) {
    if (j == root || !gt.mask[j]) continue;
    sum += (pred.joints.row(j) - gt.joints.row(j)).norm();
    ++n;
  }
  if (n == 0) throw Error(ErrorCode::kUndefinedMetric, "no visible non-root joints");
  return sum / n;
}

EvalSamples collect_samples(const Model& model, std::span<const MultiViewFrame> frames) {
  const int root = model.config.root;
  EvalSamples s;
  for (const auto& f : frames) {
    if (!f.gt3d || !f.gt3d->mask[root]) continue;
    for (const auto& v : f.views) {
      if (!v.detections.mask[root]) continue;
      s.predictions.push_back(predict_relative(model, v));
      s.ground_truth.push_back(camera_relative(*f.gt3d, v.cam, root));
    }
  }
  return s;
}

EvalReport report_from_samples(std::span<const Pose3D> predictions, std::span<const Pose3D> ground_truth,
                               int root) {
  if (predictions.size() != ground_truth.size()) throw Error(ErrorCode::kShape, "prediction/gt count mismatch");
  if (predictions.empty()) throw Error(ErrorCode::kUndefinedMetric, "no samples to evaluate");
  const int nj = ground_truth.front().num_joints();
  EvalReport r;
  std::vector<double> sums(nj, 0.0);
  r.joint_counts.assign(nj, 0);
  double total = 0.0;
  int used = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const auto& gt = ground_truth[i];
    int visible = 0;
    for (int j = 0; j < nj; ++j) visible += (j != root && gt.mask[j]) ? 1 : 0;
    if (visible == 0) continue;
    total += mpjpe(predictions[i], gt, root);
    ++used;
    for (int j = 0; j < nj; ++j) {
      if (j == root || !gt.mask[j]) continue;
      sums[j] += (predictions[i].joints.row(j) - gt.joints.row(j)).norm();
      ++r.joint_counts[j];
    }
  }
  if (used == 0) throw Error(ErrorCode::kUndefinedMetric, "no sample has visible joints");
  r.n_samples = used;
  r.avg_mm = total / used;
  for (int j = 0; j < nj; ++j) {
    r.joint_names.push_back(joint_name(j, nj));
    if (j == root || r.joint_counts[j] == 0) {
      r.per_joint_mm.emplace_back(std::nullopt);
    } else {
      r.per_joint_mm.emplace_back(sums[j] / r.joint_counts[j]);
    }
  }
  return r;
}

EvalReport per_joint_report(const Model& model, std::span<const MultiViewFrame> frames) {
  const auto s = collect_samples(model, frames);
  return report_from_samples(s.predictions, s.ground_truth, model.config.root);
}

std::string report_to_json(const EvalReport& r) {
  ojson j;
  j["avg_mm"] = r.avg_mm;
  ojson per_joint = ojson::object();
  ojson counts = ojson::object();
  for (std::size_t k = 0; k < r.joint_names.size(); ++k) {
    if (r.per_joint_mm[k]) {
      per_joint[r.joint_names[k]] = *r.per_joint_mm[k];
    } else {
      per_joint[r.joint_names[k]] = "-";
    }
    counts[r.joint_names[k]] = r.joint_counts[k];
  }
  j["per_joint_mm"] = std::move(per_joint);
  j["joint_counts"] = std::move(counts);
  j["n_samples"] = r.n_samples;
  j["meta"] = r.meta;
  return j.dump(2);
}

EvalReport report_from_json(const std::string& text) {
  EvalReport r;
  try {
    const ojson j = ojson::parse(text);
    r.avg_mm = j.at("avg_mm").get<double>();
    r.n_samples = j.at("n_samples").get<int>();
    for (const auto& [name, value] : j.at("per_joint_mm").items()) {
      r.joint_names.push_back(name);
      if (value.is_string()) {
        r.per_joint_mm.emplace_back(std::nullopt);
      } else {
        r.per_joint_mm.emplace_back(value.get<double>());
      }
      const auto& counts = j.contains("joint_counts") ? j["joint_counts"] : ojson::object();
      r.joint_counts.push_back(counts.contains(name) ? counts[name].get<int>() : 0);
    }
    if (j.contains("meta")) r.meta = j["meta"].get<std::map<std::string, std::string>>();
  } catch (const ojson::exception& e) {
    throw Error(ErrorCode::kParse, std::string("report: ") + e.what());
  }
  return r;
}

std::string report_table(const EvalReport& r) {
  std::ostringstream out;
  char line[96];
  std::snprintf(line, sizeof line, "%-14s %10s %8s\n", "Joint", "MPJPE(mm)", "count");
  out << line;
  for (std::size_t k = 0; k < r.joint_names.size(); ++k) {
    if (r.per_joint_mm[k]) {
      std::snprintf(line, sizeof line, "%-14s %10.2f %8d\n", r.joint_names[k].c_str(), *r.per_joint_mm[k],
                    r.joint_counts[k]);
    } else {
      std::snprintf(line, sizeof line, "%-14s %10s %8d\n", r.joint_names[k].c_str(), "-", r.joint_counts[k]);
    }
    out << line;
  }
  std::snprintf(line, sizeof line, "%-14s %10.3f %8d\n", "Average", r.avg_mm, r.n_samples);
  out << line;
  return out.str();
}

}  // namespace mvlift
