#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mvlift/frame.hpp"

namespace mvlift {

inline constexpr int kMaxViews = 512;

// Throws kInvalidFrame naming the frame when a type invariant is violated.
void validate_frame(const MultiViewFrame& frame);

// One JSON object per line:
// {"seq","frame","views":[{"cam","R":[9],"t":[3],"K":[9],
//   "joints2d":[[x,y]|null ...],"conf":[...]}],"gt3d":[[x,y,z]|null ...]}
std::string serialize_frame(const MultiViewFrame& frame);
MultiViewFrame parse_frame(const std::string& line);

std::vector<MultiViewFrame> read_dataset(std::istream& in);
void write_dataset(std::ostream& out, std::span<const MultiViewFrame> frames);
std::vector<MultiViewFrame> load_dataset(const std::string& path);
void save_dataset(const std::string& path, std::span<const MultiViewFrame> frames);

// Copy with every gt3d field cleared.
std::vector<MultiViewFrame> strip_ground_truth(std::span<const MultiViewFrame> frames);

struct SplitRatios {
  double train = 0.8, val = 0.1, test = 0.1;
};

struct DatasetSplit {
  std::vector<MultiViewFrame> train, val, test;
};

// Whole sequences, largest first, go to the split furthest below its target
// frame count. Every split receives at least one sequence.
DatasetSplit split_dataset(std::span<const MultiViewFrame> frames, SplitRatios ratios = {});

struct FrameSelection {
  std::size_t frame = 0;  // index into the dataset
  std::vector<int> views; // ascending view indices
};
using Batch = std::vector<FrameSelection>;

// Per-epoch seeded shuffle of frames; frames with more than
// `views_per_frame` views get a random subset. The last partial batch is kept.
std::vector<Batch> batch_iter(std::span<const MultiViewFrame> frames, int frames_per_batch, int views_per_frame,
                              std::uint64_t seed, int epoch);

}  // namespace mvlift
