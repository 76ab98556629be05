#include "mvlift/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "mvlift/losses.hpp"
#include "mvlift/pose.hpp"
#include "mvlift/synth.hpp"

namespace mvlift {

double GradCheckSuite::max_rel_error() const {
  double m = 0.0;
  for (const auto& c : checks) m = std::max(m, c.max_rel_error);
  return m;
}

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return denom > 0.0 ? std::abs(analytic - numeric) / denom : 0.0;
}

namespace {

struct Slot {
  std::size_t view = 0, index = 0;
};

std::vector<Slot> sample_slots(const std::vector<ParamView>& views, int samples, std::mt19937_64& rng) {
  std::size_t total = 0;
  for (const auto& v : views) total += v.values.size();
  std::uniform_int_distribution<std::size_t> pick(0, total - 1);
  std::vector<Slot> out;
  for (int s = 0; s < samples; ++s) {
    std::size_t k = pick(rng);
    std::size_t v = 0;
    while (k >= views[v].values.size()) k -= views[v].values.size(), ++v;
    out.push_back({v, k});
  }
  return out;
}

double step_for(double x) { return 1e-5 * std::max(1.0, std::abs(x)); }

}  // namespace

GradCheckResult check_network_gradients(std::uint64_t seed, int samples, int hidden_dim) {
  constexpr int kBatch = 16;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  Architecture arch;
  arch.hidden_dim = hidden_dim;
  MLPParams params = init_xavier(arch, seed);
  for (auto& bn : params.norms) {
    for (Eigen::Index i = 0; i < bn.gamma.size(); ++i) {
      bn.gamma[i] = 1.0 + 0.2 * normal(rng);
      bn.beta[i] = 0.2 * normal(rng);
    }
  }
  for (auto& l : params.linears) {
    for (Eigen::Index i = 0; i < l.b.size(); ++i) l.b[i] = 0.1 * normal(rng);
  }

  Eigen::MatrixXd inputs(arch.input_dim, kBatch), probe(arch.output_dim, kBatch);
  for (Eigen::Index i = 0; i < inputs.size(); ++i) inputs.data()[i] = normal(rng);
  for (Eigen::Index i = 0; i < probe.size(); ++i) probe.data()[i] = normal(rng);
  const DropoutMasks masks = draw_dropout_masks(arch, kBatch, rng);

  auto loss = [&](const MLPParams& p) { return (forward(p, inputs, masks).output.array() * probe.array()).sum(); };

  const ForwardResult fwd = forward(params, inputs, masks);
  BackwardResult bw = backward(params, fwd.cache, probe);
  auto pviews = trainable_views(params);
  auto gviews = gradient_views(bw.grads);

  double scale = 0.0;
  for (const auto& g : gviews) {
    for (double x : g.values) scale = std::max(scale, std::abs(x));
  }
  const double floor = 1e-6 * std::max(1.0, scale);

  GradCheckResult res{"network backward", 0, 0.0};
  for (const auto& slot : sample_slots(pviews, samples, rng)) {
    double& theta = pviews[slot.view].values[slot.index];
    const double orig = theta;
    const double h = step_for(orig);
    theta = orig + h;
    const double up = loss(params);
    theta = orig - h;
    const double down = loss(params);
    theta = orig;
    const double numeric = (up - down) / (2.0 * h);
    const double analytic = gviews[slot.view].values[slot.index];
    res.max_rel_error = std::max(res.max_rel_error, relative_error(analytic, numeric, floor));
    ++res.checked;
  }
  return res;
}

GradCheckResult check_total_loss_gradients(std::uint64_t seed, Projection projection, int samples) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> num_views(2, 4);

  SynthConfig sc;
  sc.frames = 1;
  sc.cameras = num_views(rng);
  sc.noise_px = 3.0;
  sc.drop_prob = 0.1;
  sc.seed = seed;
  auto frames = synth_generate(sc);
  auto& frame = frames.front();
  const int root = kDefaultRoot;
  for (auto& v : frame.views) {
    v.detections.mask[root] = true;
    const Vec3 x = world_to_camera(frame.gt3d->joints.row(root).transpose(), v.cam);
    v.detections.joints.row(root) = apply_intrinsics(project_perspective(x), v.cam.K).transpose();
    v.conf[root] = 1.0;
  }
  const int nj = frame.num_joints();

  NormStats stats = NormStats::identity(nj);
  for (int j = 0; j < nj; ++j) {
    for (int c = 0; c < 3; ++c) {
      stats.mu_X(j, c) = 50.0 * normal(rng);
      stats.sigma_X(j, c) = 150.0 + 50.0 * std::abs(normal(rng));
    }
  }
  const auto n = static_cast<Eigen::Index>(frame.views.size());
  Eigen::MatrixXd outputs(3 * nj, n);
  for (Eigen::Index i = 0; i < outputs.size(); ++i) outputs.data()[i] = normal(rng);
  const Vec3 root_world = frame.gt3d->joints.row(root).transpose();

  LossOptions opts;
  opts.projection = projection;
  opts.root = root;
  auto loss = [&](const Eigen::MatrixXd& o) { return total_loss(frame.views, o, stats, root_world, opts).breakdown.total; };
  const TotalLossResult base = total_loss(frame.views, outputs, stats, root_world, opts);
  const double floor = 1e-6 * std::max(1.0, base.grad_outputs.cwiseAbs().maxCoeff());

  GradCheckResult res{std::string("total_loss ") + to_string(projection), 0, 0.0};
  std::uniform_int_distribution<Eigen::Index> pick(0, outputs.size() - 1);
  for (int s = 0; s < samples; ++s) {
    const Eigen::Index k = pick(rng);
    Eigen::MatrixXd o = outputs;
    const double h = step_for(o.data()[k]);
    o.data()[k] = outputs.data()[k] + h;
    const double up = loss(o);
    o.data()[k] = outputs.data()[k] - h;
    const double down = loss(o);
    const double numeric = (up - down) / (2.0 * h);
    res.max_rel_error = std::max(res.max_rel_error, relative_error(base.grad_outputs.data()[k], numeric, floor));
    ++res.checked;
  }
  return res;
}

GradCheckSuite run_gradcheck(std::uint64_t seed, int samples) {
  GradCheckSuite suite;
  suite.checks.push_back(check_network_gradients(seed, samples));
  suite.checks.push_back(check_total_loss_gradients(seed, Projection::kPerspective, samples));
  suite.checks.push_back(check_total_loss_gradients(seed, Projection::kOrthographic, samples));
  return suite;
}

}  // namespace mvlift
