#include "mvlift/dataio.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mvlift/error.hpp"

namespace mvlift {

using nlohmann::json;

namespace {

std::string frame_label(const MultiViewFrame& f) { return f.seq + "/" + std::to_string(f.frame); }

json mat3_to_json(const Mat3& m) {
  json a = json::array();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) a.push_back(m(r, c));
  }
  return a;
}

Mat3 mat3_from_json(const json& a, const char* field) {
  if (!a.is_array() || a.size() != 9) throw Error(ErrorCode::kParse, std::string(field) + " must have 9 entries");
  Mat3 m;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) m(r, c) = a.at(3 * r + c).get<double>();
  }
  return m;
}

template <int D>
json joints_to_json(const Pose<D>& p) {
  json a = json::array();
  for (int j = 0; j < p.num_joints(); ++j) {
    if (!p.mask[j]) {
      a.push_back(nullptr);
      continue;
    }
    json row = json::array();
    for (int c = 0; c < D; ++c) row.push_back(p.joints(j, c));
    a.push_back(std::move(row));
  }
  return a;
}

template <int D>
Pose<D> joints_from_json(const json& a, const char* field) {
  if (!a.is_array()) throw Error(ErrorCode::kParse, std::string(field) + " must be an array");
  Pose<D> p(static_cast<int>(a.size()), Flavor::kAbsolute);
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (a[j].is_null()) {
      p.mask[j] = false;
      continue;
    }
    if (!a[j].is_array() || a[j].size() != static_cast<std::size_t>(D)) {
      throw Error(ErrorCode::kParse, std::string(field) + " entry " + std::to_string(j) + " has wrong arity");
    }
    for (int c = 0; c < D; ++c) p.joints(static_cast<Eigen::Index>(j), c) = a[j][c].get<double>();
  }
  return p;
}

}  // namespace

void validate_frame(const MultiViewFrame& f) {
  const std::string label = "frame " + frame_label(f) + ": ";
  const auto nv = f.views.size();
  if (nv < 1 || nv > static_cast<std::size_t>(kMaxViews)) {
    throw Error(ErrorCode::kInvalidFrame, label + "view count " + std::to_string(nv) + " outside [1, 512]");
  }
  const int nj = f.views.front().detections.num_joints();
  if (nj < 1) throw Error(ErrorCode::kInvalidFrame, label + "no joints");
  std::set<std::string> ids;
  for (const auto& v : f.views) {
    if (!ids.insert(v.cam.cam_id).second) {
      throw Error(ErrorCode::kInvalidFrame, label + "duplicate camera id '" + v.cam.cam_id + "'");
    }
    try {
      v.cam.validate();
    } catch (const Error& e) {
      throw Error(ErrorCode::kInvalidFrame, label + e.what());
    }
    if (v.detections.num_joints() != nj || static_cast<int>(v.detections.mask.size()) != nj) {
      throw Error(ErrorCode::kInvalidFrame, label + "views disagree on joint count");
    }
    if (!v.conf.empty() && static_cast<int>(v.conf.size()) != nj) {
      throw Error(ErrorCode::kInvalidFrame, label + "confidence length differs from joint count");
    }
    for (int j = 0; j < nj; ++j) {
      if (v.detections.mask[j] && !all_finite(v.detections.joints.row(j))) {
        throw Error(ErrorCode::kInvalidFrame, label + "non-finite detection");
      }
      if (!v.conf.empty() && !(v.conf[j] >= 0.0 && v.conf[j] <= 1.0)) {
        throw Error(ErrorCode::kInvalidFrame, label + "confidence outside [0, 1]");
      }
    }
  }
  if (f.gt3d) {
    if (f.gt3d->num_joints() != nj) throw Error(ErrorCode::kInvalidFrame, label + "gt3d joint count mismatch");
    for (int j = 0; j < nj; ++j) {
      if (f.gt3d->mask[j] && !all_finite(f.gt3d->joints.row(j))) {
        throw Error(ErrorCode::kInvalidFrame, label + "non-finite gt3d joint");
      }
    }
  }
}

std::string serialize_frame(const MultiViewFrame& f) {
  json j;
  j["seq"] = f.seq;
  j["frame"] = f.frame;
  json views = json::array();
  for (const auto& v : f.views) {
    json jv;
    jv["cam"] = v.cam.cam_id;
    jv["R"] = mat3_to_json(v.cam.R);
    jv["t"] = {v.cam.t.x(), v.cam.t.y(), v.cam.t.z()};
    jv["K"] = mat3_to_json(v.cam.K);
    jv["joints2d"] = joints_to_json(v.detections);
    jv["conf"] = v.conf;
    views.push_back(std::move(jv));
  }
  j["views"] = std::move(views);
  if (f.gt3d) j["gt3d"] = joints_to_json(*f.gt3d);
  return j.dump();
}

MultiViewFrame parse_frame(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, e.what());
  }
  MultiViewFrame f;
  try {
    f.seq = j.at("seq").get<std::string>();
    f.frame = j.at("frame").get<std::int64_t>();
    for (const auto& jv : j.at("views")) {
      View v;
      v.cam.cam_id = jv.at("cam").get<std::string>();
      v.cam.R = mat3_from_json(jv.at("R"), "R");
      const auto& t = jv.at("t");
      if (!t.is_array() || t.size() != 3) throw Error(ErrorCode::kParse, "t must have 3 entries");
      v.cam.t = Vec3(t[0].get<double>(), t[1].get<double>(), t[2].get<double>());
      v.cam.K = mat3_from_json(jv.at("K"), "K");
      v.detections = joints_from_json<2>(jv.at("joints2d"), "joints2d");
      if (jv.contains("conf")) {
        v.conf = jv["conf"].get<std::vector<double>>();
      } else {
        for (bool m : v.detections.mask) v.conf.push_back(m ? 1.0 : 0.0);
      }
      f.views.push_back(std::move(v));
    }
    if (j.contains("gt3d") && !j["gt3d"].is_null()) f.gt3d = joints_from_json<3>(j["gt3d"], "gt3d");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, e.what());
  }
  return f;
}

std::vector<MultiViewFrame> read_dataset(std::istream& in) {
  std::vector<MultiViewFrame> frames;
  std::string line;
  int line_no = 0;
  int nj = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    MultiViewFrame f;
    try {
      f = parse_frame(line);
    } catch (const Error& e) {
      throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": " + e.what());
    }
    validate_frame(f);
    if (nj < 0) nj = f.num_joints();
    if (f.num_joints() != nj) {
      throw Error(ErrorCode::kInvalidFrame, "frame " + frame_label(f) + ": has " + std::to_string(f.num_joints()) +
                                                " joints, dataset uses " + std::to_string(nj));
    }
    frames.push_back(std::move(f));
  }
  if (frames.empty()) throw Error(ErrorCode::kEmptyDataset, "dataset contains no frames");
  return frames;
}

void write_dataset(std::ostream& out, std::span<const MultiViewFrame> frames) {
  for (const auto& f : frames) out << serialize_frame(f) << '\n';
}

std::vector<MultiViewFrame> load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
  return read_dataset(in);
}

void save_dataset(const std::string& path, std::span<const MultiViewFrame> frames) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path + "'");
  write_dataset(out, frames);
}

std::vector<MultiViewFrame> strip_ground_truth(std::span<const MultiViewFrame> frames) {
  std::vector<MultiViewFrame> out(frames.begin(), frames.end());
  for (auto& f : out) f.gt3d.reset();
  return out;
}

DatasetSplit split_dataset(std::span<const MultiViewFrame> frames, SplitRatios ratios) {
  std::map<std::string, std::vector<std::size_t>> by_seq;
  for (std::size_t i = 0; i < frames.size(); ++i) by_seq[frames[i].seq].push_back(i);
  if (by_seq.size() < 3) {
    throw Error(ErrorCode::kInsufficientSequences,
                "need at least 3 sequences to split, got " + std::to_string(by_seq.size()));
  }
  std::vector<std::pair<std::string, std::size_t>> order;
  for (const auto& [seq, idx] : by_seq) order.emplace_back(seq, idx.size());
  std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) { return a.second > b.second; });

  const double total = static_cast<double>(frames.size());
  const double target[3] = {ratios.train * total, ratios.val * total, ratios.test * total};
  double filled[3] = {0, 0, 0};
  int assigned_count[3] = {0, 0, 0};
  std::map<std::string, int> assignment;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const std::size_t remaining = order.size() - k;
    int empty = 0;
    for (int s = 0; s < 3; ++s) empty += assigned_count[s] == 0 ? 1 : 0;
    const bool must_fill_empty = static_cast<int>(remaining) <= empty;
    int best = -1;
    for (int s = 0; s < 3; ++s) {
      if (must_fill_empty && assigned_count[s] != 0) continue;
      if (best < 0 || target[s] - filled[s] > target[best] - filled[best]) best = s;
    }
    assignment[order[k].first] = best;
    filled[best] += static_cast<double>(order[k].second);
    ++assigned_count[best];
  }

  DatasetSplit split;
  for (const auto& f : frames) {
    switch (assignment[f.seq]) {
      case 0: split.train.push_back(f); break;
      case 1: split.val.push_back(f); break;
      default: split.test.push_back(f); break;
    }
  }
  return split;
}

std::vector<Batch> batch_iter(std::span<const MultiViewFrame> frames, int frames_per_batch, int views_per_frame,
                              std::uint64_t seed, int epoch) {
  if (frames.empty()) throw Error(ErrorCode::kEmptyDataset, "cannot batch an empty dataset");
  if (frames_per_batch < 1 || views_per_frame < 1) throw Error(ErrorCode::kInvalidInput, "batch shape must be >= 1");
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch)};
  std::mt19937_64 rng(seq);

  std::vector<std::size_t> order(frames.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<Batch> batches;
  for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(frames_per_batch)) {
    Batch b;
    const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(frames_per_batch));
    for (std::size_t k = start; k < end; ++k) {
      FrameSelection sel;
      sel.frame = order[k];
      const int nv = static_cast<int>(frames[order[k]].views.size());
      sel.views.resize(nv);
      std::iota(sel.views.begin(), sel.views.end(), 0);
      if (nv > views_per_frame) {
        std::shuffle(sel.views.begin(), sel.views.end(), rng);
        sel.views.resize(views_per_frame);
        std::sort(sel.views.begin(), sel.views.end());
      }
      b.push_back(std::move(sel));
    }
    batches.push_back(std::move(b));
  }
  return batches;
}

}  // namespace mvlift
