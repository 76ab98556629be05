#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "mvlift/net.hpp"

namespace mvlift {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::vector<Eigen::VectorXd> m, v;  // one entry per parameter tensor
  std::int64_t step = 0;
};

AdamState make_adam_state(std::span<const ParamView> params, AdamConfig config = {});

// Bias-corrected Adam followed by decoupled weight decay
// theta <- theta * (1 - lr * weight_decay) on tensors with decay == true.
void adam_step(std::span<const ParamView> params, std::span<const ParamView> grads, AdamState& state,
               double lr, double weight_decay);

// Convenience overload over the network's trainable tensors.
void adam_step(MLPParams& params, MLPGrads& grads, AdamState& state, double lr, double weight_decay);

double lr_at_epoch(double alpha0, double gamma, int epoch);

}  // namespace mvlift
