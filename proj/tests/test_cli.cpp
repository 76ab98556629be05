#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include <json.hpp>

#include "mvlift/cli.hpp"
#include "mvlift/dataio.hpp"
#include "mvlift/eval.hpp"

namespace fs = std::filesystem;

namespace {

int run(std::initializer_list<std::string> args) {
  std::vector<std::string> storage{"mvlift"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());
  argv.push_back(nullptr);
  return mvlift::cli_main(static_cast<int>(storage.size()), argv.data());
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("mvlift_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                        "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({}), 1);
  EXPECT_EQ(run({"frobnicate"}), 1);
  EXPECT_EQ(run({"eval", "--data", "x.jsonl", "--report", "r.json"}), 1);
  EXPECT_EQ(run({"train", "--mode", "semi", "--data", "x", "--out", "m"}), 1);
  EXPECT_EQ(run({"synth", "--frames", "ten", "--out", "x"}), 1);
}

TEST(Cli, DataErrors) {
  TempDir tmp;
  EXPECT_EQ(run({"triangulate", "--data", tmp / "missing.jsonl", "--out", tmp / "o.jsonl"}), 2);
  std::ofstream(tmp / "bad.jsonl") << "{\"seq\": 1}\n";
  EXPECT_EQ(run({"triangulate", "--data", tmp / "bad.jsonl", "--out", tmp / "o.jsonl"}), 2);
  EXPECT_EQ(run({"eval", "--model", tmp / "none.json", "--data", tmp / "bad.jsonl", "--report", tmp / "r.json"}), 2);
}

TEST(Cli, GradcheckPasses) { EXPECT_EQ(run({"gradcheck", "--seed", "7"}), 0); }

TEST(Cli, FullPipeline) {
  TempDir tmp;
  ASSERT_EQ(run({"synth", "--frames", "200", "--cams", "4", "--seq-len", "20", "--noise-px", "1", "--drop-prob",
                 "0.05", "--seed", "3", "--out", tmp / "d.jsonl"}),
            0);
  EXPECT_EQ(mvlift::load_dataset(tmp / "d.jsonl").size(), 200u);
  ASSERT_EQ(run({"triangulate", "--data", tmp / "d.jsonl", "--out", tmp / "t.jsonl", "--report", tmp / "tr.json"}), 0);
  const auto tri = nlohmann::json::parse(slurp(tmp / "tr.json"));
  EXPECT_EQ(tri["frames"].get<int>(), 200);
  EXPECT_LT(tri["mean_rms_residual_px"].get<double>(), 2.0);

  std::ofstream(tmp / "c.json") << R"({"hidden_dim": 32, "epochs": 3, "patience": 5})";
  ASSERT_EQ(run({"train", "--mode", "strong", "--data", tmp / "t.jsonl", "--config", tmp / "c.json", "--out",
                 tmp / "m.json", "--history", tmp / "h.csv"}),
            0);
  EXPECT_TRUE(fs::exists(tmp / "m.json"));
  EXPECT_EQ(slurp(tmp / "h.csv").substr(0, 5), "epoch");

  ASSERT_EQ(run({"eval", "--model", tmp / "m.json", "--data", tmp / "d.jsonl", "--split", "test", "--report",
                 tmp / "r.json", "--table"}),
            0);
  const auto report = mvlift::report_from_json(slurp(tmp / "r.json"));
  EXPECT_GT(report.n_samples, 0);
  EXPECT_GT(report.avg_mm, 0.0);
  EXPECT_EQ(report.meta.at("split"), "test");

  // reports are deterministic given model and data
  ASSERT_EQ(run({"eval", "--model", tmp / "m.json", "--data", tmp / "d.jsonl", "--split", "test", "--report",
                 tmp / "r2.json"}),
            0);
  EXPECT_EQ(slurp(tmp / "r.json"), slurp(tmp / "r2.json"));

  // weak mode runs on the raw detections
  std::ofstream(tmp / "cw.json") << R"({"hidden_dim": 32, "epochs": 2, "warmup_epochs": 1})";
  EXPECT_EQ(run({"train", "--mode", "weak", "--data", tmp / "d.jsonl", "--config", tmp / "cw.json", "--out",
                 tmp / "mw.json"}),
            0);
}
