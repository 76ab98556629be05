#include "mvlift/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>

#include "mvlift/dataio.hpp"
#include "mvlift/error.hpp"
#include "mvlift/eval.hpp"
#include "mvlift/losses.hpp"
#include "mvlift/optim.hpp"
#include "mvlift/triangulate.hpp"

namespace mvlift {

Projection projection_for_epoch(int epoch, int warmup_epochs) {
  if (epoch < 0) throw Error(ErrorCode::kInvalidInput, "epoch must be >= 0");
  return epoch < warmup_epochs ? Projection::kOrthographic : Projection::kPerspective;
}

EarlyStopDecision early_stop(std::span<const double> val_metrics, int patience) {
  EarlyStopDecision d;
  if (val_metrics.empty()) return d;
  d.best_epoch = 0;
  for (std::size_t e = 1; e < val_metrics.size(); ++e) {
    if (val_metrics[e] < val_metrics[d.best_epoch]) d.best_epoch = static_cast<int>(e);
  }
  const int since_best = static_cast<int>(val_metrics.size()) - 1 - d.best_epoch;
  d.stop = since_best >= std::max(1, patience);
  return d;
}

namespace {

std::optional<Vec3> try_root(const MultiViewFrame& frame, int root) {
  try {
    return reconstruct_root(frame, root);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kInsufficientViews || e.code() == ErrorCode::kDegenerateConfiguration) {
      return std::nullopt;
    }
    throw;
  }
}

std::vector<View> root_views(const MultiViewFrame& frame, std::span<const int> indices, int root) {
  std::vector<View> out;
  for (int v : indices) {
    if (frame.views[v].detections.mask[root]) out.push_back(frame.views[v]);
  }
  return out;
}

std::vector<int> all_view_indices(const MultiViewFrame& frame) {
  std::vector<int> idx(frame.views.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  return idx;
}

void check_inputs(std::span<const MultiViewFrame> train, std::span<const MultiViewFrame> val, const TrainConfig& c) {
  c.validate();
  if (train.empty()) throw Error(ErrorCode::kEmptyDataset, "training set is empty");
  if (val.empty()) throw Error(ErrorCode::kEmptyDataset, "validation set is empty");
  const int nj = train.front().num_joints();
  if (c.root >= nj) throw Error(ErrorCode::kInvalidInput, "root index outside the skeleton");
  for (const auto& f : val) {
    if (f.num_joints() != nj) throw Error(ErrorCode::kShape, "validation set joint count differs");
  }
}

MLPParams initial_params(const TrainConfig& c, int num_joints) {
  MLPParams p = init_xavier(architecture_for(c, num_joints), c.seed);
  p.linears.back().W *= c.output_init_scale;
  return p;
}

std::mt19937_64 dropout_rng(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0x64726f70u};
  return std::mt19937_64(seq);
}

// Shared epoch bookkeeping: validation, best checkpoint, early stopping.
class Tracker {
 public:
  Tracker(TrainHistory& history, Model& best, int patience) : history_(history), best_(best), patience_(patience) {}

  // Returns true when training should stop.
  bool record(const EpochRecord& rec, const Model& current, const EpochCallback& cb) {
    history_.epochs.push_back(rec);
    metrics_.push_back(rec.val_metric);
    if (history_.best_epoch < 0 || rec.val_metric < metrics_[history_.best_epoch]) {
      history_.best_epoch = rec.epoch;
      best_ = current;
    }
    if (cb) cb(rec, current);
    if (early_stop(metrics_, patience_).stop) {
      history_.stopped_early = true;
      return true;
    }
    return false;
  }

 private:
  TrainHistory& history_;
  Model& best_;
  int patience_;
  std::vector<double> metrics_;
};

}  // namespace

NormStats weak_norm_stats(std::span<const MultiViewFrame> frames, int root) {
  std::vector<Pose2D> inputs;
  std::vector<Pose3D> targets;
  for (const auto& f : frames) {
    for (const auto& v : f.views) {
      if (v.detections.mask[root]) inputs.push_back(to_relative(v.detections, root));
    }
    PoseReconstruction rec;
    try {
      rec = triangulate_pose(f);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kEmptyReconstruction) throw;
      continue;
    }
    if (!rec.pose.mask[root]) continue;
    for (const auto& v : f.views) targets.push_back(camera_relative(rec.pose, v.cam, root));
  }
  return compute_norm_stats(inputs, targets);
}

NormStats strong_norm_stats(std::span<const MultiViewFrame> frames, int root) {
  std::vector<Pose2D> inputs;
  std::vector<Pose3D> targets;
  for (const auto& f : frames) {
    for (const auto& v : f.views) {
      if (v.detections.mask[root]) inputs.push_back(to_relative(v.detections, root));
    }
    if (!f.gt3d || !f.gt3d->mask[root]) continue;
    for (const auto& v : f.views) targets.push_back(camera_relative(*f.gt3d, v.cam, root));
  }
  return compute_norm_stats(inputs, targets);
}

double weak_validation_metric(const Model& model, std::span<const MultiViewFrame> frames) {
  const int root = model.config.root;
  double sum = 0.0;
  int count = 0;
  for (const auto& f : frames) {
    const auto idx = all_view_indices(f);
    const auto views = root_views(f, idx, root);
    if (views.size() < 2) continue;
    const auto root_world = try_root(f, root);
    if (!root_world) continue;
    Eigen::MatrixXd inputs(model.params.arch.input_dim, static_cast<Eigen::Index>(views.size()));
    for (std::size_t i = 0; i < views.size(); ++i) inputs.col(i) = model_input(views[i], model.stats, root);
    const Eigen::MatrixXd out = forward(model.params, inputs, Mode::kEval).output;
    std::vector<Pose3D> world;
    for (std::size_t i = 0; i < views.size(); ++i) world.push_back(world_prediction(views[i], out.col(i), model.stats, root));
    const Pose3D mean = mean_world_pose(world);
    sum += reprojection_loss(mean, *root_world, views, Projection::kPerspective, model.config.huber_delta).value;
    ++count;
  }
  if (count == 0) throw Error(ErrorCode::kUndefinedMetric, "no validation frame has two root detections");
  return sum / count;
}

double strong_validation_metric(const Model& model, std::span<const MultiViewFrame> frames) {
  return per_joint_report(model, frames).avg_mm;
}

double validation_metric(const Model& model, std::span<const MultiViewFrame> frames) {
  return model.config.mode == TrainMode::kWeak ? weak_validation_metric(model, frames)
                                               : strong_validation_metric(model, frames);
}

Model initial_model(std::span<const MultiViewFrame> train, const TrainConfig& config) {
  if (train.empty()) throw Error(ErrorCode::kEmptyDataset, "training set is empty");
  Model model;
  model.config = config;
  model.stats = config.mode == TrainMode::kWeak ? weak_norm_stats(train, config.root)
                                                 : strong_norm_stats(train, config.root);
  model.params = initial_params(config, train.front().num_joints());
  return model;
}

TrainResult train_weak(std::span<const MultiViewFrame> train_in, std::span<const MultiViewFrame> val_in,
                       const TrainConfig& config, const EpochCallback& on_epoch) {
  check_inputs(train_in, val_in, config);
  const auto train = strip_ground_truth(train_in);
  const auto val = strip_ground_truth(val_in);
  const int root = config.root;

  TrainConfig weak_config = config;
  weak_config.mode = TrainMode::kWeak;
  Model model = initial_model(train, weak_config);

  AdamState adam = make_adam_state(trainable_views(model.params));
  auto rng = dropout_rng(config.seed);
  std::vector<std::optional<std::optional<Vec3>>> root_cache(train.size());
  auto root_of = [&](std::size_t i) -> std::optional<Vec3> {
    if (!config.cache_root) return try_root(train[i], root);
    if (!root_cache[i]) root_cache[i] = try_root(train[i], root);
    return *root_cache[i];
  };

  TrainResult result;
  Tracker tracker(result.history, result.model, config.patience);
  LossOptions opts;
  opts.lambda = config.lambda;
  opts.delta = config.huber_delta;
  opts.detach_mean = config.detach_mean;
  opts.root = root;

  struct FrameWork {
    std::vector<View> views;
    Vec3 root_world;
    Eigen::Index col = 0;
  };

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = lr_at_epoch(config.alpha0, config.gamma, epoch);
    opts.projection = projection_for_epoch(epoch, config.warmup_epochs);
    rec.proj = to_string(opts.projection);
    int used_frames = 0;

    for (const auto& batch : batch_iter(train, config.frames_per_batch, config.views_per_frame, config.seed, epoch)) {
      std::vector<FrameWork> work;
      Eigen::Index cols = 0;
      for (const auto& sel : batch) {
        auto views = root_views(train[sel.frame], sel.views, root);
        const auto root_world = views.size() >= 2 ? root_of(sel.frame) : std::nullopt;
        if (!root_world) {
          ++rec.skipped_frames;
          continue;
        }
        work.push_back({std::move(views), *root_world, cols});
        cols += static_cast<Eigen::Index>(work.back().views.size());
      }
      if (work.empty()) continue;

      Eigen::MatrixXd inputs(model.params.arch.input_dim, cols);
      for (const auto& w : work) {
        for (std::size_t i = 0; i < w.views.size(); ++i) {
          inputs.col(w.col + static_cast<Eigen::Index>(i)) = model_input(w.views[i], model.stats, root);
        }
      }
      const ForwardResult fwd = forward(model.params, inputs, Mode::kTrain, &rng);
      Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(fwd.output.rows(), cols);
      const double scale = 1.0 / static_cast<double>(work.size());
      for (const auto& w : work) {
        const auto n = static_cast<Eigen::Index>(w.views.size());
        const auto res = total_loss(w.views, fwd.output.middleCols(w.col, n), model.stats, w.root_world, opts);
        rec.train_total += res.breakdown.total;
        rec.train_multiview += res.breakdown.multiview;
        rec.train_reprojection += res.breakdown.reprojection;
        rec.depth_failures += res.breakdown.depth_failures;
        grad.middleCols(w.col, n) = scale * res.grad_outputs;
      }
      used_frames += static_cast<int>(work.size());

      auto bw = backward(model.params, fwd.cache, grad);
      update_running_stats(model.params, fwd.cache, config.bn_momentum);
      adam_step(model.params, bw.grads, adam, rec.lr, config.weight_decay);
    }
    if (used_frames == 0) {
      throw Error(ErrorCode::kTraining, "epoch " + std::to_string(epoch) + " skipped every frame");
    }
    rec.train_total /= used_frames;
    rec.train_multiview /= used_frames;
    rec.train_reprojection /= used_frames;
    rec.val_metric = weak_validation_metric(model, val);
    if (tracker.record(rec, model, on_epoch)) break;
  }
  return result;
}

TrainResult train_strong(std::span<const MultiViewFrame> train, std::span<const MultiViewFrame> val,
                         const TrainConfig& config, const EpochCallback& on_epoch) {
  check_inputs(train, val, config);
  const int nj = train.front().num_joints();
  const int root = config.root;

  TrainConfig strong_config = config;
  strong_config.mode = TrainMode::kStrong;
  Model model = initial_model(train, strong_config);

  AdamState adam = make_adam_state(trainable_views(model.params));
  auto rng = dropout_rng(config.seed);
  const double delta = config.huber_delta;

  TrainResult result;
  Tracker tracker(result.history, result.model, config.patience);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = lr_at_epoch(config.alpha0, config.gamma, epoch);
    rec.proj = "-";
    int used_samples = 0;

    for (const auto& batch : batch_iter(train, config.frames_per_batch, config.views_per_frame, config.seed, epoch)) {
      std::vector<Eigen::VectorXd> inputs, targets;
      std::vector<std::vector<bool>> masks;
      for (const auto& sel : batch) {
        const auto& f = train[sel.frame];
        if (!f.gt3d || !f.gt3d->mask[root]) {
          ++rec.skipped_frames;
          continue;
        }
        for (const auto& v : root_views(f, sel.views, root)) {
          inputs.push_back(model_input(v, model.stats, root));
          const Pose3D target = normalize_3d(camera_relative(*f.gt3d, v.cam, root), model.stats);
          targets.push_back(flatten<3>(target.joints));
          masks.push_back(target.mask);
        }
      }
      if (inputs.empty()) continue;
      const auto n = static_cast<Eigen::Index>(inputs.size());
      Eigen::MatrixXd x(model.params.arch.input_dim, n);
      for (Eigen::Index i = 0; i < n; ++i) x.col(i) = inputs[i];

      const ForwardResult fwd = forward(model.params, x, Mode::kTrain, &rng);
      Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(fwd.output.rows(), n);
      for (Eigen::Index i = 0; i < n; ++i) {
        for (int j = 0; j < nj; ++j) {
          if (j == root || !masks[i][j]) continue;
          for (int c = 0; c < 3; ++c) {
            const double out = fwd.output(3 * j + c, i);
            const double tgt = targets[i][3 * j + c];
            rec.train_total += huber(out, tgt, delta);
            grad(3 * j + c, i) = huber_grad(out, tgt, delta) / static_cast<double>(n);
          }
        }
      }
      used_samples += static_cast<int>(n);

      auto bw = backward(model.params, fwd.cache, grad);
      update_running_stats(model.params, fwd.cache, config.bn_momentum);
      adam_step(model.params, bw.grads, adam, rec.lr, config.weight_decay);
    }
    if (used_samples == 0) {
      throw Error(ErrorCode::kTraining, "epoch " + std::to_string(epoch) + " had no supervised samples");
    }
    rec.train_total /= used_samples;
    rec.val_metric = strong_validation_metric(model, val);
    if (tracker.record(rec, model, on_epoch)) break;
  }
  return result;
}

TrainResult train(std::span<const MultiViewFrame> train_set, std::span<const MultiViewFrame> val,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
  return config.mode == TrainMode::kWeak ? train_weak(train_set, val, config, on_epoch)
                                         : train_strong(train_set, val, config, on_epoch);
}

void write_history_csv(std::ostream& out, const TrainHistory& history) {
  out << "epoch,lr,proj,train_total,train_LM,train_LR,val_metric\n";
  char line[256];
  for (const auto& r : history.epochs) {
    std::snprintf(line, sizeof line, "%d,%.17g,%s,%.17g,%.17g,%.17g,%.17g\n", r.epoch, r.lr, r.proj.c_str(),
                  r.train_total, r.train_multiview, r.train_reprojection, r.val_metric);
    out << line;
  }
}

void save_history_csv(const std::string& path, const TrainHistory& history) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write history '" + path + "'");
  write_history_csv(out, history);
}

}  // namespace mvlift
