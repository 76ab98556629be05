#include "mvlift/optim.hpp"

#include <cmath>

#include "mvlift/error.hpp"

namespace mvlift {

AdamState make_adam_state(std::span<const ParamView> params, AdamConfig config) {
  AdamState s;
  s.config = config;
  for (const auto& p : params) {
    s.m.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.values.size())));
    s.v.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.values.size())));
  }
  return s;
}

void adam_step(std::span<const ParamView> params, std::span<const ParamView> grads, AdamState& state,
               double lr, double weight_decay) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw Error(ErrorCode::kState, "parameter, gradient and optimizer tensor counts differ");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].values.size() != grads[i].values.size() ||
        static_cast<Eigen::Index>(params[i].values.size()) != state.m[i].size()) {
      throw Error(ErrorCode::kState, "shape mismatch on tensor '" + params[i].name + "'");
    }
  }
  ++state.step;
  const auto& c = state.config;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);

  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto n = static_cast<Eigen::Index>(params[i].values.size());
    Eigen::Map<Eigen::VectorXd> theta(params[i].values.data(), n);
    const Eigen::Map<const Eigen::VectorXd> g(grads[i].values.data(), n);
    auto& m = state.m[i];
    auto& v = state.v[i];
    m = c.beta1 * m + (1.0 - c.beta1) * g;
    v = c.beta2 * v + (1.0 - c.beta2) * g.cwiseAbs2();
    theta.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + c.eps);
    if (params[i].decay && weight_decay != 0.0) theta *= (1.0 - lr * weight_decay);
  }
}

void adam_step(MLPParams& params, MLPGrads& grads, AdamState& state, double lr, double weight_decay) {
  const auto pv = trainable_views(params);
  const auto gv = gradient_views(grads);
  adam_step(pv, gv, state, lr, weight_decay);
}

double lr_at_epoch(double alpha0, double gamma, int epoch) {
  if (epoch < 0) throw Error(ErrorCode::kInvalidInput, "epoch must be >= 0");
  return alpha0 * std::pow(gamma, epoch);
}

}  // namespace mvlift
