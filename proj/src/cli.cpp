#include "mvlift/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "mvlift/dataio.hpp"
#include "mvlift/error.hpp"
#include "mvlift/eval.hpp"
#include "mvlift/gradcheck.hpp"
#include "mvlift/model.hpp"
#include "mvlift/synth.hpp"
#include "mvlift/trainer.hpp"
#include "mvlift/triangulate.hpp"

namespace mvlift {
namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitGradcheck = 3;
constexpr double kGradcheckTolerance = 1e-4;

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path + "'");
  out << text << '\n';
}

struct SynthArgs {
  SynthConfig config;
  std::string out;
};

int run_synth(const SynthArgs& a) {
  const auto frames = synth_generate(a.config);
  save_dataset(a.out, frames);
  std::cout << "wrote " << frames.size() << " frames to " << a.out << '\n';
  return kExitOk;
}

struct TriangulateArgs {
  std::string data, out, report;
};

int run_triangulate(const TriangulateArgs& a) {
  auto frames = load_dataset(a.data);
  std::vector<MultiViewFrame> kept;
  double rms_sum = 0.0;
  int rms_count = 0, dropped = 0, degenerate = 0;
  for (auto& f : frames) {
    PoseReconstruction rec;
    try {
      rec = triangulate_pose(f);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kEmptyReconstruction) throw;
      ++dropped;
      continue;
    }
    for (int j = 0; j < rec.pose.num_joints(); ++j) {
      if (!rec.pose.mask[j]) continue;
      rms_sum += rec.rms_residuals[j];
      ++rms_count;
    }
    degenerate += rec.degenerate_joints;
    f.gt3d = rec.pose;
    kept.push_back(std::move(f));
  }
  if (kept.empty()) throw Error(ErrorCode::kEmptyDataset, "no frame could be triangulated");
  save_dataset(a.out, kept);
  const double mean_rms = rms_count ? rms_sum / rms_count : 0.0;
  std::printf("triangulated %zu frames (%d dropped), mean rms residual %.4f px\n", kept.size(), dropped, mean_rms);
  if (!a.report.empty()) {
    nlohmann::ordered_json j;
    j["frames"] = kept.size();
    j["dropped_frames"] = dropped;
    j["degenerate_joints"] = degenerate;
    j["mean_rms_residual_px"] = mean_rms;
    write_text(a.report, j.dump(2));
  }
  return kExitOk;
}

struct TrainArgs {
  std::string mode, data, config, out, history;
  std::optional<int> epochs;
  std::optional<std::uint64_t> seed;
};

int run_train(const TrainArgs& a) {
  TrainConfig config = a.config.empty() ? TrainConfig{} : load_config(a.config);
  if (!a.mode.empty()) config.mode = train_mode_from_string(a.mode);
  if (a.epochs) config.epochs = *a.epochs;
  if (a.seed) config.seed = *a.seed;
  config.validate();

  const auto frames = load_dataset(a.data);
  const auto split = split_dataset(frames);
  const auto result = train(split.train, split.val, config, [](const EpochRecord& r, const Model&) {
    std::printf("epoch %3d  lr %.3e  %-12s  loss %.6g  val %.6g\n", r.epoch, r.lr, r.proj.c_str(), r.train_total,
                r.val_metric);
    std::fflush(stdout);
  });
  save_model(a.out, result.model);
  if (!a.history.empty()) save_history_csv(a.history, result.history);
  std::printf("best epoch %d%s, model written to %s\n", result.history.best_epoch,
              result.history.stopped_early ? " (stopped early)" : "", a.out.c_str());
  return kExitOk;
}

struct EvalArgs {
  std::string model, data, report, split = "all";
  bool table = false;
};

int run_eval(const EvalArgs& a) {
  const Model model = load_model(a.model);
  const auto frames = load_dataset(a.data);
  std::vector<MultiViewFrame> subset;
  if (a.split == "all") {
    subset = frames;
  } else {
    auto parts = split_dataset(frames);
    subset = a.split == "train" ? parts.train : a.split == "val" ? parts.val : parts.test;
  }
  EvalReport report = per_joint_report(model, subset);
  report.meta["model"] = a.model;
  report.meta["data"] = a.data;
  report.meta["split"] = a.split;
  report.meta["mode"] = to_string(model.config.mode);
  report.meta["seed"] = std::to_string(model.config.seed);
  write_text(a.report, report_to_json(report));
  if (a.table) std::cout << report_table(report);
  std::printf("MPJPE %.3f mm over %d samples\n", report.avg_mm, report.n_samples);
  return kExitOk;
}

int run_gradcheck_cmd(std::uint64_t seed) {
  const GradCheckSuite suite = run_gradcheck(seed);
  for (const auto& c : suite.checks) {
    std::printf("%-28s %2d params  max rel err %.3e\n", c.name.c_str(), c.checked, c.max_rel_error);
  }
  const double worst = suite.max_rel_error();
  std::printf("max rel err %.3e\n", worst);
  return worst < kGradcheckTolerance ? kExitOk : kExitGradcheck;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"Multi-view weakly supervised 2D-to-3D pose lifting"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "generate a synthetic multi-view dataset");
  s->add_option("--frames", synth.config.frames, "number of frames")->capture_default_str();
  s->add_option("--cams", synth.config.cameras, "cameras on the ring")->capture_default_str();
  s->add_option("--seq-len", synth.config.sequence_length, "frames per sequence")->capture_default_str();
  s->add_option("--noise-px", synth.config.noise_px, "Gaussian detection noise (px)")->capture_default_str();
  s->add_option("--drop-prob", synth.config.drop_prob, "per-joint drop probability")->capture_default_str();
  s->add_option("--radius", synth.config.ring_radius, "camera ring radius (mm)")->capture_default_str();
  s->add_option("--seed", synth.config.seed, "random seed")->capture_default_str();
  s->add_option("--out", synth.out, "output JSONL")->required();

  TriangulateArgs tri;
  auto* t = app.add_subcommand("triangulate", "replace gt3d with multi-view triangulations");
  t->add_option("--data", tri.data, "input JSONL")->required();
  t->add_option("--out", tri.out, "output JSONL")->required();
  t->add_option("--report", tri.report, "summary JSON");

  TrainArgs tr;
  auto* r = app.add_subcommand("train", "train a lifting network");
  r->add_option("--mode", tr.mode, "weak|strong (overrides config)")->check(CLI::IsMember({"weak", "strong"}));
  r->add_option("--data", tr.data, "dataset JSONL")->required();
  r->add_option("--config", tr.config, "TrainConfig JSON");
  r->add_option("--out", tr.out, "model JSON")->required();
  r->add_option("--history", tr.history, "history CSV");
  r->add_option("--epochs", tr.epochs, "override epochs");
  r->add_option("--seed", tr.seed, "override seed");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "MPJPE of a model on a dataset with gt3d");
  e->add_option("--model", ev.model, "model JSON")->required();
  e->add_option("--data", ev.data, "dataset JSONL")->required();
  e->add_option("--report", ev.report, "report JSON")->required();
  e->add_option("--split", ev.split, "all|train|val|test")
      ->check(CLI::IsMember({"all", "train", "val", "test"}))
      ->capture_default_str();
  e->add_flag("--table", ev.table, "print the per-joint table");

  std::uint64_t gc_seed = 0;
  auto* g = app.add_subcommand("gradcheck", "finite-difference gradient suite");
  g->add_option("--seed", gc_seed, "random seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return kExitUsage;
  }

  try {
    if (s->parsed()) return run_synth(synth);
    if (t->parsed()) return run_triangulate(tri);
    if (r->parsed()) return run_train(tr);
    if (e->parsed()) return run_eval(ev);
    if (g->parsed()) return run_gradcheck_cmd(gc_seed);
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace mvlift
