#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mvlift/geometry.hpp"
#include "mvlift/net.hpp"

namespace mvlift {

struct GradCheckResult {
  std::string name;
  int checked = 0;
  double max_rel_error = 0.0;
};

struct GradCheckSuite {
  std::vector<GradCheckResult> checks;
  double max_rel_error() const;
};

// |a - n| / max(|a|, |n|, floor)
double relative_error(double analytic, double numeric, double floor);

// Backward pass of a random network on a batch of 16 with fixed dropout
// masks, probed through a random linear functional of the outputs.
GradCheckResult check_network_gradients(std::uint64_t seed, int samples = 20, int hidden_dim = 64);

// total_loss gradient w.r.t. normalized network outputs on a random frame
// with 2-4 views.
GradCheckResult check_total_loss_gradients(std::uint64_t seed, Projection projection, int samples = 20);

GradCheckSuite run_gradcheck(std::uint64_t seed, int samples = 20);

}  // namespace mvlift
