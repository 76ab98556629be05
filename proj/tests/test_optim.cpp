#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "mvlift/error.hpp"
#include "mvlift/optim.hpp"

using namespace mvlift;

namespace {

struct Tensors {
  std::vector<double> theta, grad;
  std::vector<ParamView> pv() { return {{"w", theta, true}}; }
  std::vector<ParamView> gv() { return {{"w", grad, true}}; }
};

}  // namespace

TEST(Adam, SingleStepHandComputed) {
  Tensors t{{0.0}, {1.0}};
  auto state = make_adam_state(t.pv());
  adam_step(t.pv(), t.gv(), state, 1e-3, 0.0);
  // m_hat = v_hat = 1
  EXPECT_DOUBLE_EQ(t.theta[0], -1e-3 / (1.0 + 1e-8));
  EXPECT_NEAR(t.theta[0], -9.99999995e-4, 1e-11);
  EXPECT_EQ(state.step, 1);
}

TEST(Adam, ZeroGradientOnlyDecays) {
  std::vector<double> w{2.0, -3.0}, gamma{1.5}, gw{0.0, 0.0}, gg{0.0};
  std::vector<ParamView> pv{{"w", w, true}, {"gamma", gamma, false}};
  std::vector<ParamView> gv{{"w", gw, true}, {"gamma", gg, false}};
  auto state = make_adam_state(pv);
  adam_step(pv, gv, state, 1e-2, 1e-1);
  EXPECT_DOUBLE_EQ(w[0], 2.0 * (1 - 1e-3));
  EXPECT_DOUBLE_EQ(w[1], -3.0 * (1 - 1e-3));
  EXPECT_EQ(gamma[0], 1.5);
}

TEST(Adam, EqualGradientsUpdateIdentically) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0, 1);
  Tensors t{{0.3, 0.3}, {0, 0}};
  auto state = make_adam_state(t.pv());
  for (int k = 0; k < 10; ++k) {
    t.grad[0] = t.grad[1] = n(rng);
    adam_step(t.pv(), t.gv(), state, 1e-3, 1e-4);
    EXPECT_EQ(t.theta[0], t.theta[1]);
  }
}

TEST(Adam, GradientScaleInvariance) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0, 1);
  Tensors a{std::vector<double>(20, 0.0), std::vector<double>(20)};
  Tensors b = a;
  AdamConfig cfg;
  cfg.eps = 1e-12;
  auto sa = make_adam_state(a.pv(), cfg);
  auto sb = make_adam_state(b.pv(), cfg);
  for (int k = 0; k < 5; ++k) {
    for (std::size_t i = 0; i < a.grad.size(); ++i) {
      a.grad[i] = n(rng);
      b.grad[i] = 10.0 * a.grad[i];
    }
    const auto before_a = a.theta, before_b = b.theta;
    adam_step(a.pv(), a.gv(), sa, 1e-3, 0.0);
    adam_step(b.pv(), b.gv(), sb, 1e-3, 0.0);
    for (std::size_t i = 0; i < a.theta.size(); ++i) {
      const double ua = a.theta[i] - before_a[i], ub = b.theta[i] - before_b[i];
      EXPECT_LT(std::abs(ua - ub), 1e-6 * std::abs(ua));
    }
  }
}

TEST(Adam, MatchesReferenceRecurrence) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0, 1);
  Tensors t{{0.5, -0.25, 1.0}, {0, 0, 0}};
  auto state = make_adam_state(t.pv());
  std::vector<double> ref = t.theta, m(3, 0.0), v(3, 0.0);
  const double lr = 3e-3, wd = 1e-2;
  for (int step = 1; step <= 8; ++step) {
    for (auto& g : t.grad) g = n(rng);
    adam_step(t.pv(), t.gv(), state, lr, wd);
    for (int i = 0; i < 3; ++i) {
      m[i] = 0.9 * m[i] + 0.1 * t.grad[i];
      v[i] = 0.999 * v[i] + 0.001 * t.grad[i] * t.grad[i];
      const double mh = m[i] / (1 - std::pow(0.9, step));
      const double vh = v[i] / (1 - std::pow(0.999, step));
      ref[i] = (ref[i] - lr * mh / (std::sqrt(vh) + 1e-8)) * (1 - lr * wd);
      EXPECT_NEAR(t.theta[i], ref[i], 1e-15);
    }
  }
}

TEST(Adam, ShapeMismatchIsStateError) {
  Tensors t{{0.0, 1.0}, {1.0}};
  auto state = make_adam_state(t.pv());
  try {
    adam_step(t.pv(), t.gv(), state, 1e-3, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kState);
  }
}

TEST(Adam, NetworkOverloadExemptsBatchNorm) {
  Architecture a;
  a.hidden_dim = 8;
  auto p = init_xavier(a, 1);
  auto g = zero_grads(p);
  auto state = make_adam_state(trainable_views(p));
  const auto w_before = p.linears[0].W;
  adam_step(p, g, state, 0.1, 0.5);
  EXPECT_TRUE(p.linears[0].W.isApprox(w_before * 0.95));
  EXPECT_TRUE((p.norms[0].gamma.array() == 1.0).all());
}

TEST(LrAtEpoch, Examples) {
  EXPECT_DOUBLE_EQ(lr_at_epoch(5e-4, 0.96, 0), 5e-4);
  EXPECT_DOUBLE_EQ(lr_at_epoch(5e-4, 0.96, 1), 4.8e-4);
  for (int k : {0, 1, 7, 99}) EXPECT_EQ(lr_at_epoch(5e-4, 1.0, k), 5e-4);
  EXPECT_THROW(lr_at_epoch(5e-4, 0.96, -1), Error);
}

TEST(LrAtEpoch, StrictlyDecreasing) {
  for (int k = 0; k < 200; ++k) EXPECT_LT(lr_at_epoch(5e-4, 0.96, k + 1), lr_at_epoch(5e-4, 0.96, k));
}
