#include "mvlift/net.hpp"

#include <cmath>

#include "mvlift/error.hpp"

namespace mvlift {

namespace {

int stage_in_dim(const Architecture& a, int stage) { return stage == 0 ? a.input_dim : a.hidden_dim; }

void check_arch(const Architecture& a) {
  if (a.input_dim < 1 || a.hidden_dim < 1 || a.output_dim < 1 || a.num_blocks < 0) {
    throw Error(ErrorCode::kShape, "architecture dimensions must be >= 1");
  }
  if (!(a.dropout >= 0.0 && a.dropout < 1.0)) {
    throw Error(ErrorCode::kInvalidInput, "dropout probability must be in [0, 1)");
  }
}

void check_params(const MLPParams& p) {
  const auto& a = p.arch;
  if (static_cast<int>(p.linears.size()) != a.num_linears() ||
      static_cast<int>(p.norms.size()) != a.num_hidden_stages()) {
    throw Error(ErrorCode::kShape, "parameter layer count disagrees with architecture");
  }
  for (int s = 0; s < a.num_linears(); ++s) {
    const int in = s == a.num_hidden_stages() ? a.hidden_dim : stage_in_dim(a, s);
    const int out = s == a.num_hidden_stages() ? a.output_dim : a.hidden_dim;
    if (p.linears[s].W.rows() != out || p.linears[s].W.cols() != in || p.linears[s].b.size() != out) {
      throw Error(ErrorCode::kShape, "linear layer " + std::to_string(s) + " has inconsistent shape");
    }
  }
}

// Hidden stage: linear -> BN -> ReLU -> dropout.
Eigen::MatrixXd stage_forward(const LinearLayer& lin, const BatchNormLayer& bn, double eps,
                              const Eigen::MatrixXd& in, Mode mode, const Eigen::MatrixXd* keep,
                              StageCache* cache) {
  Eigen::MatrixXd z = lin.W * in;
  z.colwise() += lin.b;
  const Eigen::Index batch = z.cols();

  Eigen::VectorXd mean, var;
  if (mode == Mode::kTrain) {
    mean = z.rowwise().mean();
    var = (z.colwise() - mean).array().square().rowwise().mean().matrix();
  } else {
    mean = bn.running_mean;
    var = bn.running_var;
  }
  const Eigen::ArrayXd inv_std = (var.array() + eps).rsqrt();
  Eigen::MatrixXd xhat = ((z.colwise() - mean).array().colwise() * inv_std).matrix();
  Eigen::MatrixXd act = ((xhat.array().colwise() * bn.gamma.array()).colwise() + bn.beta.array()).matrix();
  Eigen::MatrixXd out = act.cwiseMax(0.0);
  if (keep != nullptr) out.array() *= keep->array();

  if (cache != nullptr) {
    cache->input = in;
    cache->xhat = std::move(xhat);
    cache->batch_mean = std::move(mean);
    cache->batch_var = std::move(var);
    cache->activated = std::move(act);
    cache->dropout = keep != nullptr ? *keep : Eigen::MatrixXd::Ones(out.rows(), batch);
  }
  return out;
}

// Returns gradient w.r.t. the stage input.
Eigen::MatrixXd stage_backward(const LinearLayer& lin, const BatchNormLayer& bn, double eps,
                               const StageCache& c, const Eigen::MatrixXd& grad_out, LinearLayer& g_lin,
                               Eigen::VectorXd& g_gamma, Eigen::VectorXd& g_beta) {
  const double batch = static_cast<double>(grad_out.cols());
  Eigen::MatrixXd g_act = grad_out.cwiseProduct(c.dropout);
  g_act.array() *= (c.activated.array() > 0.0).cast<double>();

  g_gamma = g_act.cwiseProduct(c.xhat).rowwise().sum();
  g_beta = g_act.rowwise().sum();

  const Eigen::MatrixXd g_xhat = (g_act.array().colwise() * bn.gamma.array()).matrix();
  const Eigen::ArrayXd inv_std = (c.batch_var.array() + eps).rsqrt();
  const Eigen::VectorXd sum_g = g_xhat.rowwise().sum();
  const Eigen::VectorXd sum_gx = g_xhat.cwiseProduct(c.xhat).rowwise().sum();
  Eigen::MatrixXd g_z = batch * g_xhat;
  g_z.colwise() -= sum_g;
  g_z -= (c.xhat.array().colwise() * sum_gx.array()).matrix();
  g_z.array().colwise() *= inv_std / batch;

  g_lin.W.noalias() = g_z * c.input.transpose();
  g_lin.b = g_z.rowwise().sum();
  return lin.W.transpose() * g_z;
}

ForwardResult run_forward(const MLPParams& params, const Eigen::MatrixXd& inputs, Mode mode,
                          const DropoutMasks* masks) {
  check_params(params);
  const auto& a = params.arch;
  if (inputs.rows() != a.input_dim) {
    throw Error(ErrorCode::kShape, "input has " + std::to_string(inputs.rows()) + " rows, expected " +
                                       std::to_string(a.input_dim));
  }
  if (inputs.cols() < 1) throw Error(ErrorCode::kShape, "empty batch");
  if (masks != nullptr && static_cast<int>(masks->masks.size()) != a.num_hidden_stages()) {
    throw Error(ErrorCode::kShape, "dropout mask count disagrees with architecture");
  }

  ForwardResult res;
  const bool train = mode == Mode::kTrain;
  if (train) {
    res.cache.arch = a;
    res.cache.batch = static_cast<int>(inputs.cols());
    res.cache.stages.resize(a.num_hidden_stages());
  }
  auto run_stage = [&](int s, const Eigen::MatrixXd& in) {
    const Eigen::MatrixXd* keep = masks != nullptr ? &masks->masks[s] : nullptr;
    if (keep != nullptr && (keep->rows() != a.hidden_dim || keep->cols() != in.cols())) {
      throw Error(ErrorCode::kShape, "dropout mask shape mismatch");
    }
    return stage_forward(params.linears[s], params.norms[s], a.bn_eps, in, mode, keep,
                         train ? &res.cache.stages[s] : nullptr);
  };

  Eigen::MatrixXd h = run_stage(0, inputs);
  for (int blk = 0; blk < a.num_blocks; ++blk) {
    const int s = 1 + 2 * blk;
    Eigen::MatrixXd inner = run_stage(s, h);
    h += run_stage(s + 1, inner);
  }
  const auto& out_layer = params.linears.back();
  res.output.noalias() = out_layer.W * h;
  res.output.colwise() += out_layer.b;
  if (train) res.cache.last_hidden = std::move(h);
  return res;
}

}  // namespace

std::vector<ParamView> trainable_views(MLPParams& params) {
  std::vector<ParamView> views;
  for (std::size_t i = 0; i < params.linears.size(); ++i) {
    auto& l = params.linears[i];
    views.push_back({"linear" + std::to_string(i) + ".W", {l.W.data(), static_cast<std::size_t>(l.W.size())}, true});
    views.push_back({"linear" + std::to_string(i) + ".b", {l.b.data(), static_cast<std::size_t>(l.b.size())}, true});
  }
  for (std::size_t i = 0; i < params.norms.size(); ++i) {
    auto& n = params.norms[i];
    views.push_back({"bn" + std::to_string(i) + ".gamma", {n.gamma.data(), static_cast<std::size_t>(n.gamma.size())}, false});
    views.push_back({"bn" + std::to_string(i) + ".beta", {n.beta.data(), static_cast<std::size_t>(n.beta.size())}, false});
  }
  return views;
}

std::vector<ParamView> gradient_views(MLPGrads& grads) {
  std::vector<ParamView> views;
  for (std::size_t i = 0; i < grads.linears.size(); ++i) {
    auto& l = grads.linears[i];
    views.push_back({"linear" + std::to_string(i) + ".W", {l.W.data(), static_cast<std::size_t>(l.W.size())}, true});
    views.push_back({"linear" + std::to_string(i) + ".b", {l.b.data(), static_cast<std::size_t>(l.b.size())}, true});
  }
  for (std::size_t i = 0; i < grads.gamma.size(); ++i) {
    views.push_back({"bn" + std::to_string(i) + ".gamma", {grads.gamma[i].data(), static_cast<std::size_t>(grads.gamma[i].size())}, false});
    views.push_back({"bn" + std::to_string(i) + ".beta", {grads.beta[i].data(), static_cast<std::size_t>(grads.beta[i].size())}, false});
  }
  return views;
}

std::size_t num_trainable(const MLPParams& params) {
  std::size_t n = 0;
  for (const auto& l : params.linears) n += l.W.size() + l.b.size();
  for (const auto& bn : params.norms) n += bn.gamma.size() + bn.beta.size();
  return n;
}

std::vector<TensorShape> shape_manifest(const MLPParams& params) {
  std::vector<TensorShape> out;
  for (std::size_t i = 0; i < params.linears.size(); ++i) {
    const auto& l = params.linears[i];
    out.push_back({"linear" + std::to_string(i) + ".W", static_cast<int>(l.W.rows()), static_cast<int>(l.W.cols())});
    out.push_back({"linear" + std::to_string(i) + ".b", static_cast<int>(l.b.size()), 1});
  }
  for (std::size_t i = 0; i < params.norms.size(); ++i) {
    const auto n = static_cast<int>(params.norms[i].gamma.size());
    for (const char* f : {"gamma", "beta", "running_mean", "running_var"}) {
      out.push_back({"bn" + std::to_string(i) + "." + f, n, 1});
    }
  }
  return out;
}

MLPParams init_zero(const Architecture& arch) {
  check_arch(arch);
  MLPParams p;
  p.arch = arch;
  for (int s = 0; s < arch.num_linears(); ++s) {
    const bool last = s == arch.num_hidden_stages();
    const int in = last ? arch.hidden_dim : stage_in_dim(arch, s);
    const int out = last ? arch.output_dim : arch.hidden_dim;
    p.linears.push_back({Eigen::MatrixXd::Zero(out, in), Eigen::VectorXd::Zero(out)});
  }
  for (int s = 0; s < arch.num_hidden_stages(); ++s) {
    const int h = arch.hidden_dim;
    p.norms.push_back({Eigen::VectorXd::Ones(h), Eigen::VectorXd::Zero(h), Eigen::VectorXd::Zero(h),
                       Eigen::VectorXd::Ones(h)});
  }
  return p;
}

MLPParams init_xavier(const Architecture& arch, std::uint64_t seed) {
  MLPParams p = init_zero(arch);
  std::mt19937_64 rng(seed);
  for (auto& l : p.linears) {
    const double limit = std::sqrt(6.0 / static_cast<double>(l.W.rows() + l.W.cols()));
    std::uniform_real_distribution<double> dist(-limit, limit);
    // Row-major fill order so the draw sequence matches the serialized layout.
    for (Eigen::Index r = 0; r < l.W.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.W.cols(); ++c) l.W(r, c) = dist(rng);
    }
  }
  return p;
}

MLPGrads zero_grads(const MLPParams& params) {
  MLPGrads g;
  for (const auto& l : params.linears) {
    g.linears.push_back({Eigen::MatrixXd::Zero(l.W.rows(), l.W.cols()), Eigen::VectorXd::Zero(l.b.size())});
  }
  for (const auto& n : params.norms) {
    g.gamma.push_back(Eigen::VectorXd::Zero(n.gamma.size()));
    g.beta.push_back(Eigen::VectorXd::Zero(n.beta.size()));
  }
  return g;
}

DropoutMasks draw_dropout_masks(const Architecture& arch, int batch, std::mt19937_64& rng) {
  DropoutMasks m;
  const double p = arch.dropout;
  const double scale = 1.0 / (1.0 - p);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int s = 0; s < arch.num_hidden_stages(); ++s) {
    Eigen::MatrixXd keep(arch.hidden_dim, batch);
    for (Eigen::Index c = 0; c < keep.cols(); ++c) {
      for (Eigen::Index r = 0; r < keep.rows(); ++r) keep(r, c) = unif(rng) >= p ? scale : 0.0;
    }
    m.masks.push_back(std::move(keep));
  }
  return m;
}

ForwardResult forward(const MLPParams& params, const Eigen::MatrixXd& inputs, Mode mode, std::mt19937_64* rng) {
  if (mode == Mode::kEval || params.arch.dropout == 0.0) return run_forward(params, inputs, mode, nullptr);
  if (rng == nullptr) throw Error(ErrorCode::kState, "train-mode forward with dropout needs an RNG");
  const DropoutMasks masks = draw_dropout_masks(params.arch, static_cast<int>(inputs.cols()), *rng);
  return run_forward(params, inputs, mode, &masks);
}

ForwardResult forward(const MLPParams& params, const Eigen::MatrixXd& inputs, const DropoutMasks& masks) {
  return run_forward(params, inputs, Mode::kTrain, &masks);
}

Eigen::VectorXd predict(const MLPParams& params, const Eigen::VectorXd& input) {
  return run_forward(params, input, Mode::kEval, nullptr).output.col(0);
}

BackwardResult backward(const MLPParams& params, const ForwardCache& cache, const Eigen::MatrixXd& grad_output) {
  check_params(params);
  const auto& a = params.arch;
  if (!cache.populated() || !(cache.arch == a) ||
      static_cast<int>(cache.stages.size()) != a.num_hidden_stages()) {
    throw Error(ErrorCode::kState, "forward cache does not belong to these parameters");
  }
  if (grad_output.rows() != a.output_dim || grad_output.cols() != cache.batch) {
    throw Error(ErrorCode::kState, "output gradient shape disagrees with cached batch");
  }

  BackwardResult res;
  res.grads = zero_grads(params);
  auto& g = res.grads;

  const auto& out_layer = params.linears.back();
  g.linears.back().W.noalias() = grad_output * cache.last_hidden.transpose();
  g.linears.back().b = grad_output.rowwise().sum();
  Eigen::MatrixXd g_h = out_layer.W.transpose() * grad_output;

  auto back_stage = [&](int s, const Eigen::MatrixXd& grad) {
    return stage_backward(params.linears[s], params.norms[s], a.bn_eps, cache.stages[s], grad, g.linears[s],
                          g.gamma[s], g.beta[s]);
  };
  for (int blk = a.num_blocks - 1; blk >= 0; --blk) {
    const int s = 1 + 2 * blk;
    const Eigen::MatrixXd g_inner = back_stage(s + 1, g_h);
    g_h += back_stage(s, g_inner);  // identity skip carries g_h through unchanged
  }
  res.grad_input = back_stage(0, g_h);
  return res;
}

void update_running_stats(MLPParams& params, const ForwardCache& cache, double momentum) {
  if (!cache.populated() || static_cast<int>(cache.stages.size()) != static_cast<int>(params.norms.size())) {
    throw Error(ErrorCode::kState, "running-stat update needs a train-mode forward cache");
  }
  for (std::size_t s = 0; s < params.norms.size(); ++s) {
    auto& bn = params.norms[s];
    bn.running_mean = (1.0 - momentum) * bn.running_mean + momentum * cache.stages[s].batch_mean;
    bn.running_var = (1.0 - momentum) * bn.running_var + momentum * cache.stages[s].batch_var;
  }
}

}  // namespace mvlift
