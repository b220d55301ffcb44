#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "uqbench/datagen.hpp"

namespace uqbench {

/// Fully connected net: affine layers with leaky-ReLU between them and a
/// single linear output neuron.  `dropout_site` is the 1-based index of the
/// hidden layer whose post-activation outputs are masked (default: the
/// next-to-last hidden layer).
struct Architecture {
  std::vector<int> layer_widths;  // input, hidden..., output
  double leaky_slope = 0.01;
  int dropout_site = 0;

  int num_layers() const { return static_cast<int>(layer_widths.size()) - 1; }
  int hidden_count() const { return num_layers() - 1; }
  int input_dim() const { return layer_widths.front(); }
  int site_width() const { return layer_widths[dropout_site]; }
  void validate() const;
};

/// widths {input, 128, 64, 32, 1}; site defaults to the next-to-last hidden
/// layer when not given.
Architecture make_architecture(int input_dim,
                               std::vector<int> hidden = {128, 64, 32},
                               double leaky_slope = 0.01,
                               int dropout_site = 0);

struct NetworkParams {
  std::vector<MatrixXd> weights;  // weights[l]: widths[l+1] x widths[l]
  std::vector<VectorXd> biases;
};

struct Gradients {
  std::vector<MatrixXd> weights;
  std::vector<VectorXd> biases;
  double loss = 0.0;
};

struct TrainConfig {
  int epochs = 0;
  double learning_rate = 1e-2;
  std::optional<double> l2_coefficient;  // default 1 / |train set|
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::optional<int> batch_size;  // default |train set|
  std::uint64_t seed = 0;

  void validate(std::size_t train_size) const;
  double resolve_l2(std::size_t train_size) const;
  int resolve_batch(std::size_t train_size) const;
};

struct AdamState {
  std::vector<MatrixXd> m_weights, v_weights;
  std::vector<VectorXd> m_biases, v_biases;
  long step = 0;
};

AdamState make_adam_state(const NetworkParams& params);

/// Xavier-uniform weights (bound sqrt(6 / (fan_in + fan_out))), zero biases.
NetworkParams init_xavier(const Architecture& arch, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Batched core.  Inputs are d x B, targets 1 x B; an optional mask matrix
// (site_width x B) multiplies the dropout-site activations elementwise, one
// column per sample.  Methods with a shared per-batch mask replicate it.

struct ForwardCache {
  std::vector<MatrixXd> preacts;        // z_l per affine layer, 1-based slot l-1
  std::vector<MatrixXd> acts;           // acts[0] = X; acts[l] after activation+mask
  MatrixXd site_unmasked;               // activation at the site before masking
  MatrixXd site_mask;                   // the mask that was applied
  bool masked = false;
};

/// Runs the batch forward pass; output row is cache.acts.back().
void forward_batch(const NetworkParams& params, const Architecture& arch,
                   const MatrixXd& inputs, const MatrixXd* mask,
                   ForwardCache& cache);

/// Loss = (1/B) sum_b (out_b - y_b)^2 + l2 * sum_l ||W_l||^2 (biases
/// excluded).  Optionally also produces the loss gradient with respect to
/// the inputs (for adversarial examples) and the mask (for learned dropout).
void backward_batch(const NetworkParams& params, const Architecture& arch,
                    const ForwardCache& cache, const MatrixXd& targets,
                    double l2, Gradients& grads, MatrixXd* input_grad = nullptr,
                    MatrixXd* mask_grad = nullptr);

// ---------------------------------------------------------------------------
// Spec-level operations.

/// Single-sample forward pass; mask (if present) is one column for the site.
double forward(const NetworkParams& params, const Architecture& arch,
               const VectorXd& x, const VectorXd* dropout_mask = nullptr);

/// Batched deterministic forward (no mask), one output per column.
VectorXd forward_many(const NetworkParams& params, const Architecture& arch,
                      const MatrixXd& inputs);

/// Exact reverse-mode gradient of the batch loss above.
Gradients gradient(const NetworkParams& params, const Architecture& arch,
                   const MatrixXd& inputs, const MatrixXd& targets, double l2,
                   const MatrixXd* dropout_mask = nullptr);

/// Standard Adam update with bias-corrected moments; increments state.step.
void adam_step(NetworkParams& params, const Gradients& grads, AdamState& state,
               const TrainConfig& cfg);

/// Bernoulli keep/drop vector with inverted scaling: entries are 0 with
/// probability rate, 1/(1-rate) otherwise.
VectorXd bernoulli_mask(int width, double rate, class Rng& rng);

/// Full-batch-shuffled mini-batch Adam training.  An optional fixed dropout
/// rate applies a fresh per-batch Bernoulli mask at the dropout site.
NetworkParams train(const Architecture& arch, const Dataset& data,
                    const TrainConfig& cfg,
                    std::optional<double> dropout_rate = std::nullopt);

/// Column-major packing of a dataset for the batched API.
void pack_dataset(const Dataset& data, MatrixXd& inputs, MatrixXd& targets);

}  // namespace uqbench
