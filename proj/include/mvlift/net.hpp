#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace mvlift {

// Residual lifting MLP:
//   input linear -> [BN, ReLU, dropout]
//   num_blocks x (h + [linear, BN, ReLU, dropout] x 2)
//   output linear
// With the default two blocks that is six linear layers.
struct Architecture {
  int input_dim = 36;
  int hidden_dim = 1024;
  int output_dim = 54;
  int num_blocks = 2;
  double dropout = 0.5;
  double bn_eps = 1e-5;

  int num_hidden_stages() const { return 1 + 2 * num_blocks; }
  int num_linears() const { return num_hidden_stages() + 1; }
  bool operator==(const Architecture&) const = default;
};

struct LinearLayer {
  Eigen::MatrixXd W;  // out x in
  Eigen::VectorXd b;
};

struct BatchNormLayer {
  Eigen::VectorXd gamma, beta;
  Eigen::VectorXd running_mean, running_var;
};

struct MLPParams {
  Architecture arch;
  std::vector<LinearLayer> linears;   // num_linears()
  std::vector<BatchNormLayer> norms;  // num_hidden_stages()
};

struct MLPGrads {
  std::vector<LinearLayer> linears;
  std::vector<Eigen::VectorXd> gamma, beta;
};

// A flat view of one trainable tensor. Batch-norm affine parameters are not
// subject to weight decay.
struct ParamView {
  std::string name;
  std::span<double> values;
  bool decay = true;
};

std::vector<ParamView> trainable_views(MLPParams& params);
std::vector<ParamView> gradient_views(MLPGrads& grads);
std::size_t num_trainable(const MLPParams& params);

// Name and (rows, cols) of every tensor, in serialization order.
struct TensorShape {
  std::string name;
  int rows = 0, cols = 0;
  bool operator==(const TensorShape&) const = default;
};
std::vector<TensorShape> shape_manifest(const MLPParams& params);

MLPParams init_xavier(const Architecture& arch, std::uint64_t seed);
MLPParams init_zero(const Architecture& arch);
MLPGrads zero_grads(const MLPParams& params);

enum class Mode { kTrain, kEval };

// One 0-or-1/(1-p) matrix (hidden x batch) per hidden stage.
struct DropoutMasks {
  std::vector<Eigen::MatrixXd> masks;
};

DropoutMasks draw_dropout_masks(const Architecture& arch, int batch, std::mt19937_64& rng);

struct StageCache {
  Eigen::MatrixXd input;      // linear input
  Eigen::MatrixXd xhat;       // batch-normalized pre-activation
  Eigen::VectorXd batch_mean, batch_var;
  Eigen::MatrixXd activated;  // after BN affine, before ReLU
  Eigen::MatrixXd dropout;    // scaled keep mask
};

struct ForwardCache {
  Architecture arch;
  int batch = 0;
  std::vector<StageCache> stages;
  Eigen::MatrixXd last_hidden;  // input to the output linear
  bool populated() const { return batch > 0 && !stages.empty(); }
};

struct ForwardResult {
  Eigen::MatrixXd output;  // output_dim x batch
  ForwardCache cache;      // empty in eval mode
};

// Columns of `inputs` are samples. Train mode uses batch statistics and
// draws dropout masks from `rng` (required when dropout > 0).
ForwardResult forward(const MLPParams& params, const Eigen::MatrixXd& inputs, Mode mode,
                      std::mt19937_64* rng = nullptr);
// Train-mode forward with caller-provided dropout masks.
ForwardResult forward(const MLPParams& params, const Eigen::MatrixXd& inputs, const DropoutMasks& masks);

Eigen::VectorXd predict(const MLPParams& params, const Eigen::VectorXd& input);

struct BackwardResult {
  MLPGrads grads;
  Eigen::MatrixXd grad_input;
};

BackwardResult backward(const MLPParams& params, const ForwardCache& cache,
                        const Eigen::MatrixXd& grad_output);

// running <- (1 - momentum) * running + momentum * batch
void update_running_stats(MLPParams& params, const ForwardCache& cache, double momentum = 0.1);

}  // namespace mvlift
