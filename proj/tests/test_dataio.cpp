#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "mvlift/dataio.hpp"
#include "mvlift/synth.hpp"
#include "test_util.hpp"

using namespace mvlift;

namespace {

MultiViewFrame random_frame(std::mt19937_64& rng, const std::string& seq, int id) {
  std::uniform_int_distribution<int> nviews(1, 6);
  std::uniform_real_distribution<double> u(-2000, 2000), c(0, 1);
  std::bernoulli_distribution drop(0.2), has_gt(0.5);
  const int nj = 18;
  MultiViewFrame f;
  f.seq = seq;
  f.frame = id;
  const int nv = nviews(rng);
  for (int i = 0; i < nv; ++i) {
    View v;
    v.cam.R = testutil::random_rotation(rng);
    v.cam.t = Vec3(u(rng), u(rng), u(rng));
    v.cam.K = testutil::intrinsics(900 + u(rng) / 100, 480 + u(rng) / 10, 510 + u(rng) / 10, u(rng) / 1000);
    v.cam.cam_id = "c" + std::to_string(i);
    v.detections = Pose2D(nj);
    v.conf.assign(nj, 0.0);
    for (int j = 0; j < nj; ++j) {
      v.detections.mask[j] = !drop(rng);
      if (v.detections.mask[j]) {
        v.detections.joints.row(j) << u(rng), u(rng);
        v.conf[j] = c(rng);
      }
    }
    f.views.push_back(v);
  }
  if (has_gt(rng)) {
    Pose3D gt(nj);
    for (int j = 0; j < nj; ++j) {
      gt.mask[j] = !drop(rng);
      if (gt.mask[j]) gt.joints.row(j) << u(rng), u(rng), u(rng);
    }
    f.gt3d = gt;
  }
  return f;
}

void expect_same_frame(const MultiViewFrame& a, const MultiViewFrame& b) {
  EXPECT_EQ(a.seq, b.seq);
  EXPECT_EQ(a.frame, b.frame);
  ASSERT_EQ(a.views.size(), b.views.size());
  for (std::size_t i = 0; i < a.views.size(); ++i) {
    const auto &va = a.views[i], &vb = b.views[i];
    EXPECT_EQ(va.cam.R, vb.cam.R);
    EXPECT_EQ(va.cam.t, vb.cam.t);
    EXPECT_EQ(va.cam.K, vb.cam.K);
    EXPECT_EQ(va.cam.cam_id, vb.cam.cam_id);
    EXPECT_EQ(va.detections.joints, vb.detections.joints);
    EXPECT_EQ(va.detections.mask, vb.detections.mask);
    EXPECT_EQ(va.conf, vb.conf);
  }
  ASSERT_EQ(a.gt3d.has_value(), b.gt3d.has_value());
  if (a.gt3d) {
    EXPECT_EQ(a.gt3d->joints, b.gt3d->joints);
    EXPECT_EQ(a.gt3d->mask, b.gt3d->mask);
  }
}

std::vector<MultiViewFrame> sequences(std::initializer_list<int> sizes) {
  std::vector<MultiViewFrame> out;
  int s = 0;
  for (int n : sizes) {
    for (int k = 0; k < n; ++k) {
      MultiViewFrame f;
      f.seq = "s" + std::to_string(s);
      f.frame = k;
      out.push_back(f);
    }
    ++s;
  }
  return out;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInvalidInput;
}

}  // namespace

TEST(Dataset, RoundTrip) {
  std::mt19937_64 rng(1);
  std::vector<MultiViewFrame> frames;
  for (int k = 0; k < 100; ++k) frames.push_back(random_frame(rng, "seq" + std::to_string(k / 10), k));
  std::stringstream ss;
  write_dataset(ss, frames);
  const auto back = read_dataset(ss);
  ASSERT_EQ(back.size(), frames.size());
  for (std::size_t k = 0; k < frames.size(); ++k) expect_same_frame(frames[k], back[k]);
}

TEST(Dataset, FileRoundTrip) {
  SynthConfig sc;
  sc.frames = 12;
  sc.noise_px = 1.5;
  sc.drop_prob = 0.1;
  const auto frames = synth_generate(sc);
  const std::string path = ::testing::TempDir() + "mvlift_roundtrip.jsonl";
  save_dataset(path, frames);
  const auto back = load_dataset(path);
  ASSERT_EQ(back.size(), frames.size());
  for (std::size_t k = 0; k < frames.size(); ++k) expect_same_frame(frames[k], back[k]);
  EXPECT_EQ(code_of([] { load_dataset("/nonexistent/dir/x.jsonl"); }), ErrorCode::kIo);
}

TEST(Dataset, RejectsNonOrthonormalRotationWithFrameId) {
  std::mt19937_64 rng(2);
  auto f = random_frame(rng, "walk", 42);
  f.views[0].cam.R(0, 1) += 1e-3;
  std::stringstream ss;
  ss << serialize_frame(f) << '\n';
  try {
    read_dataset(ss);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidFrame);
    EXPECT_NE(std::string(e.what()).find("walk/42"), std::string::npos) << e.what();
  }
}

TEST(Dataset, EmptyInput) {
  std::stringstream empty;
  EXPECT_EQ(code_of([&] { read_dataset(empty); }), ErrorCode::kEmptyDataset);
  std::stringstream blanks("\n\n  \n");
  EXPECT_EQ(code_of([&] { read_dataset(blanks); }), ErrorCode::kEmptyDataset);
}

TEST(Dataset, ParseErrorCarriesLineNumber) {
  std::mt19937_64 rng(3);
  std::stringstream ss;
  ss << serialize_frame(random_frame(rng, "a", 0)) << '\n' << serialize_frame(random_frame(rng, "a", 1)) << '\n' << "{not json\n";
  try {
    read_dataset(ss);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParse);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(Dataset, JointCountMustAgree) {
  SynthConfig sc;
  sc.frames = 2;
  auto frames = synth_generate(sc);
  for (auto& v : frames[1].views) {
    v.detections = Pose2D(17);
    v.conf.assign(17, 1.0);
  }
  frames[1].gt3d.reset();
  std::stringstream ss;
  write_dataset(ss, frames);
  EXPECT_EQ(code_of([&] { read_dataset(ss); }), ErrorCode::kInvalidFrame);
}

TEST(ValidateFrame, Invariants) {
  SynthConfig sc;
  sc.frames = 1;
  auto f = synth_generate(sc).front();
  EXPECT_NO_THROW(validate_frame(f));
  auto dup = f;
  dup.views[1].cam.cam_id = dup.views[0].cam.cam_id;
  EXPECT_EQ(code_of([&] { validate_frame(dup); }), ErrorCode::kInvalidFrame);
  auto none = f;
  none.views.clear();
  EXPECT_EQ(code_of([&] { validate_frame(none); }), ErrorCode::kInvalidFrame);
  auto many = f;
  while (many.views.size() <= static_cast<std::size_t>(kMaxViews)) {
    many.views.push_back(f.views[0]);
    many.views.back().cam.cam_id = "x" + std::to_string(many.views.size());
  }
  EXPECT_EQ(code_of([&] { validate_frame(many); }), ErrorCode::kInvalidFrame);
  auto badk = f;
  badk.views[0].cam.K(2, 0) = 1;
  EXPECT_EQ(code_of([&] { validate_frame(badk); }), ErrorCode::kInvalidFrame);
}

TEST(Synth, NoiseFreeDetectionsAreExactProjections) {
  for (std::uint64_t seed : {1u, 2u}) {
    SynthConfig sc;
    sc.frames = 50;
    sc.cameras = 5;
    sc.seed = seed;
    for (const auto& f : synth_generate(sc)) {
      for (const auto& v : f.views) {
        for (int j = 0; j < f.num_joints(); ++j) {
          const Vec2 px = apply_intrinsics(project_perspective(world_to_camera(f.gt3d->joints.row(j).transpose(), v.cam)), v.cam.K);
          EXPECT_EQ(v.detections.joints.row(j), px.transpose());
          EXPECT_TRUE(v.detections.mask[j]);
        }
      }
    }
  }
}

TEST(Synth, SeedDeterminism) {
  SynthConfig sc;
  sc.frames = 20;
  sc.noise_px = 2;
  sc.drop_prob = 0.1;
  sc.seed = 77;
  std::stringstream a, b;
  write_dataset(a, synth_generate(sc));
  write_dataset(b, synth_generate(sc));
  EXPECT_EQ(a.str(), b.str());
  sc.seed = 78;
  std::stringstream c;
  write_dataset(c, synth_generate(sc));
  EXPECT_NE(a.str(), c.str());
}

TEST(Synth, DropRate) {
  SynthConfig sc;
  sc.frames = 200;
  sc.cameras = 4;
  sc.drop_prob = 0.2;
  sc.seed = 5;
  long slots = 0, dropped = 0;
  for (const auto& f : synth_generate(sc)) {
    for (const auto& v : f.views) {
      for (bool m : v.detections.mask) {
        ++slots;
        dropped += m ? 0 : 1;
      }
    }
  }
  ASSERT_GE(slots, 10000);
  EXPECT_NEAR(static_cast<double>(dropped) / slots, 0.2, 0.02);
}

TEST(Synth, OutputPassesValidation) {
  SynthConfig sc;
  sc.frames = 30;
  sc.cameras = 7;
  sc.noise_px = 3;
  sc.drop_prob = 0.3;
  for (const auto& f : synth_generate(sc)) EXPECT_NO_THROW(validate_frame(f));
}

TEST(Synth, BoneLengthsRespected) {
  SynthConfig sc;
  sc.frames = 30;
  const BoneLengths b;
  for (const auto& f : synth_generate(sc)) {
    const auto& J = f.gt3d->joints;
    EXPECT_NEAR((J.row(2) - J.row(3)).norm(), b.upper_arm, 1e-9);
    EXPECT_NEAR((J.row(3) - J.row(4)).norm(), b.forearm, 1e-9);
    EXPECT_NEAR((J.row(9) - J.row(10)).norm(), b.shin, 1e-9);
    const Eigen::RowVector3d neck = J.row(1) - sc.volume_center.transpose();
    EXPECT_LE(neck.cwiseAbs().maxCoeff(), sc.volume_size / 2);
  }
}

TEST(Synth, ConfigValidation) {
  SynthConfig sc;
  sc.drop_prob = 1.0;
  EXPECT_THROW(sc.validate(), Error);
  sc.drop_prob = 0.0;
  sc.cameras = 0;
  EXPECT_THROW(sc.validate(), Error);
}

TEST(Split, TenEqualSequences) {
  const auto s = split_dataset(sequences({5, 5, 5, 5, 5, 5, 5, 5, 5, 5}));
  EXPECT_EQ(s.train.size(), 40u);
  EXPECT_EQ(s.val.size(), 5u);
  EXPECT_EQ(s.test.size(), 5u);
}

TEST(Split, GiantSequenceLandsInTrain) {
  const auto s = split_dataset(sequences({3, 100, 4, 2, 5}));
  const bool giant_in_train = std::any_of(s.train.begin(), s.train.end(), [](const auto& f) { return f.seq == "s1"; });
  EXPECT_TRUE(giant_in_train);
  EXPECT_FALSE(s.val.empty());
  EXPECT_FALSE(s.test.empty());
}

TEST(Split, PartitionAndSequenceAtomicity) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> len(1, 30);
  std::vector<int> sizes;
  for (int k = 0; k < 17; ++k) sizes.push_back(len(rng));
  std::vector<MultiViewFrame> frames;
  for (int k = 0; k < 17; ++k) {
    for (int i = 0; i < sizes[k]; ++i) {
      MultiViewFrame f;
      f.seq = "q" + std::to_string(k);
      f.frame = i;
      frames.push_back(f);
    }
  }
  std::shuffle(frames.begin(), frames.end(), rng);
  const auto s = split_dataset(frames);
  EXPECT_EQ(s.train.size() + s.val.size() + s.test.size(), frames.size());
  std::set<std::pair<std::string, std::int64_t>> seen;
  std::map<std::string, int> owner;
  int part = 0;
  for (const auto* split : {&s.train, &s.val, &s.test}) {
    for (const auto& f : *split) {
      EXPECT_TRUE(seen.insert({f.seq, f.frame}).second);
      auto [it, fresh] = owner.emplace(f.seq, part);
      EXPECT_EQ(it->second, part) << f.seq << " straddles splits";
    }
    ++part;
  }
}

TEST(Split, NeedsThreeSequences) {
  EXPECT_EQ(code_of([] { split_dataset(sequences({10, 10})); }), ErrorCode::kInsufficientSequences);
}

TEST(BatchIter, PartialLastBatchKept) {
  SynthConfig sc;
  sc.frames = 20;
  sc.cameras = 2;
  const auto frames = synth_generate(sc);
  const auto batches = batch_iter(frames, 8, 16, 1, 0);
  ASSERT_EQ(batches.size(), 3u);
  EXPECT_EQ(batches[0].size(), 8u);
  EXPECT_EQ(batches[1].size(), 8u);
  EXPECT_EQ(batches[2].size(), 4u);
  std::set<std::size_t> all;
  for (const auto& b : batches) {
    for (const auto& s : b) {
      all.insert(s.frame);
      EXPECT_EQ(s.views, (std::vector<int>{0, 1}));
    }
  }
  EXPECT_EQ(all.size(), 20u);
}

TEST(BatchIter, ViewSubsetOfLargeFrame) {
  SynthConfig sc;
  sc.frames = 3;
  sc.cameras = 31;
  const auto frames = synth_generate(sc);
  for (int epoch = 0; epoch < 5; ++epoch) {
    for (const auto& b : batch_iter(frames, 8, 16, 3, epoch)) {
      for (const auto& s : b) {
        EXPECT_EQ(s.views.size(), 16u);
        EXPECT_TRUE(std::is_sorted(s.views.begin(), s.views.end()));
        EXPECT_EQ(std::set<int>(s.views.begin(), s.views.end()).size(), 16u);
        EXPECT_GE(s.views.front(), 0);
        EXPECT_LT(s.views.back(), 31);
      }
    }
  }
}

TEST(BatchIter, SeedEpochDeterminism) {
  SynthConfig sc;
  sc.frames = 40;
  sc.cameras = 20;
  const auto frames = synth_generate(sc);
  auto flat = [&](std::uint64_t seed, int epoch) {
    std::vector<std::size_t> out;
    for (const auto& b : batch_iter(frames, 8, 16, seed, epoch)) {
      for (const auto& s : b) {
        out.push_back(s.frame);
        out.insert(out.end(), s.views.begin(), s.views.end());
      }
    }
    return out;
  };
  EXPECT_EQ(flat(5, 2), flat(5, 2));
  EXPECT_NE(flat(5, 2), flat(5, 3));
  EXPECT_NE(flat(5, 2), flat(6, 2));
}

TEST(StripGroundTruth, RemovesGt3d) {
  SynthConfig sc;
  sc.frames = 3;
  for (const auto& f : strip_ground_truth(synth_generate(sc))) EXPECT_FALSE(f.gt3d.has_value());
}
