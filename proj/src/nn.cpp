#include "uqbench/nn.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "uqbench/errors.hpp"
#include "uqbench/rng.hpp"

namespace uqbench {

void Architecture::validate() const {
  if (layer_widths.size() < 3) {
    throw InvalidArgument("architecture: needs at least one hidden layer");
  }
  for (int w : layer_widths) {
    if (w < 1) throw InvalidArgument("architecture: layer widths must be >= 1");
  }
  if (layer_widths.back() != 1) {
    throw InvalidArgument("architecture: output width must be 1");
  }
  if (!(leaky_slope > 0.0 && leaky_slope < 1.0)) {
    throw InvalidArgument("architecture: leaky slope must lie in (0, 1)");
  }
  if (dropout_site < 1 || dropout_site > hidden_count()) {
    throw InvalidArgument("architecture: dropout site must index a hidden layer");
  }
}

Architecture make_architecture(int input_dim, std::vector<int> hidden,
                               double leaky_slope, int dropout_site) {
  Architecture arch;
  arch.layer_widths.reserve(hidden.size() + 2);
  arch.layer_widths.push_back(input_dim);
  arch.layer_widths.insert(arch.layer_widths.end(), hidden.begin(), hidden.end());
  arch.layer_widths.push_back(1);
  arch.leaky_slope = leaky_slope;
  arch.dropout_site =
      dropout_site > 0 ? dropout_site
                       : std::max(1, static_cast<int>(hidden.size()) - 1);
  arch.validate();
  return arch;
}

void TrainConfig::validate(std::size_t train_size) const {
  if (epochs < 0) throw InvalidArgument("train config: epochs must be >= 0");
  if (!(learning_rate > 0.0)) {
    throw InvalidArgument("train config: learning rate must be positive");
  }
  if (l2_coefficient && *l2_coefficient < 0.0) {
    throw InvalidArgument("train config: l2 coefficient must be >= 0");
  }
  if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0) ||
      !(adam_beta2 > 0.0 && adam_beta2 < 1.0)) {
    throw InvalidArgument("train config: adam betas must lie in (0, 1)");
  }
  if (batch_size) {
    if (*batch_size < 1 || static_cast<std::size_t>(*batch_size) > train_size) {
      throw InvalidArgument("train config: batch size must lie in [1, N]");
    }
  }
}

double TrainConfig::resolve_l2(std::size_t train_size) const {
  return l2_coefficient ? *l2_coefficient : 1.0 / static_cast<double>(train_size);
}

int TrainConfig::resolve_batch(std::size_t train_size) const {
  return batch_size ? *batch_size : static_cast<int>(train_size);
}

AdamState make_adam_state(const NetworkParams& params) {
  AdamState state;
  state.m_weights.reserve(params.weights.size());
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    state.m_weights.push_back(MatrixXd::Zero(params.weights[l].rows(),
                                             params.weights[l].cols()));
    state.v_weights.push_back(MatrixXd::Zero(params.weights[l].rows(),
                                             params.weights[l].cols()));
    state.m_biases.push_back(VectorXd::Zero(params.biases[l].size()));
    state.v_biases.push_back(VectorXd::Zero(params.biases[l].size()));
  }
  return state;
}

NetworkParams init_xavier(const Architecture& arch, std::uint64_t seed) {
  arch.validate();
  Rng rng(seed);
  NetworkParams params;
  const int layers = arch.num_layers();
  params.weights.reserve(layers);
  params.biases.reserve(layers);
  for (int l = 0; l < layers; ++l) {
    const int fan_in = arch.layer_widths[l];
    const int fan_out = arch.layer_widths[l + 1];
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    MatrixXd w(fan_out, fan_in);
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) {
        w(i, j) = rng.uniform(-bound, bound);
      }
    }
    params.weights.push_back(std::move(w));
    params.biases.push_back(VectorXd::Zero(fan_out));
  }
  return params;
}

namespace {

void check_shapes(const NetworkParams& params, const Architecture& arch,
                  Eigen::Index input_rows) {
  const int layers = arch.num_layers();
  if (static_cast<int>(params.weights.size()) != layers ||
      static_cast<int>(params.biases.size()) != layers) {
    throw InvalidArgument("network: parameter count does not match architecture");
  }
  if (input_rows != arch.layer_widths.front()) {
    throw InvalidArgument("network: input has dimension " +
                          std::to_string(input_rows) + ", expected " +
                          std::to_string(arch.layer_widths.front()));
  }
  for (int l = 0; l < layers; ++l) {
    if (params.weights[l].rows() != arch.layer_widths[l + 1] ||
        params.weights[l].cols() != arch.layer_widths[l] ||
        params.biases[l].size() != arch.layer_widths[l + 1]) {
      throw InvalidArgument("network: layer " + std::to_string(l + 1) +
                            " parameter shape mismatch");
    }
  }
}

inline void leaky_relu_inplace(MatrixXd& z, double slope) {
  z = z.array().max(z.array() * slope);
}

}  // namespace

void forward_batch(const NetworkParams& params, const Architecture& arch,
                   const MatrixXd& inputs, const MatrixXd* mask,
                   ForwardCache& cache) {
  check_shapes(params, arch, inputs.rows());
  const int layers = arch.num_layers();
  const Eigen::Index batch = inputs.cols();
  if (mask != nullptr && (mask->rows() != arch.site_width() ||
                          mask->cols() != batch)) {
    throw InvalidArgument("network: dropout mask shape mismatch");
  }

  cache.preacts.resize(layers);
  cache.acts.resize(layers + 1);
  cache.masked = mask != nullptr;
  cache.acts[0] = inputs;
  for (int l = 1; l <= layers; ++l) {
    MatrixXd& z = cache.preacts[l - 1];
    z.noalias() = params.weights[l - 1] * cache.acts[l - 1];
    z.colwise() += params.biases[l - 1];
    cache.acts[l] = z;
    if (l < layers) {
      leaky_relu_inplace(cache.acts[l], arch.leaky_slope);
      if (mask != nullptr && l == arch.dropout_site) {
        cache.site_unmasked = cache.acts[l];
        cache.site_mask = *mask;
        cache.acts[l].array() *= mask->array();
      }
    }
  }
}

void backward_batch(const NetworkParams& params, const Architecture& arch,
                    const ForwardCache& cache, const MatrixXd& targets,
                    double l2, Gradients& grads, MatrixXd* input_grad,
                    MatrixXd* mask_grad) {
  const int layers = arch.num_layers();
  const Eigen::Index batch = targets.cols();
  const MatrixXd& out = cache.acts[layers];
  if (out.cols() != batch || targets.rows() != 1) {
    throw InvalidArgument("network: target shape mismatch");
  }

  grads.weights.resize(layers);
  grads.biases.resize(layers);

  const MatrixXd residual = out - targets;
  grads.loss = residual.squaredNorm() / static_cast<double>(batch);

  // dZ for the output layer; loss is mean squared error over the batch.
  MatrixXd delta = (2.0 / static_cast<double>(batch)) * residual;

  for (int l = layers; l >= 1; --l) {
    grads.weights[l - 1].noalias() = delta * cache.acts[l - 1].transpose();
    if (l2 != 0.0) {
      grads.weights[l - 1] += (2.0 * l2) * params.weights[l - 1];
      grads.loss += l2 * params.weights[l - 1].squaredNorm();
    }
    grads.biases[l - 1] = delta.rowwise().sum();

    if (l == 1) {
      if (input_grad != nullptr) {
        input_grad->noalias() = params.weights[0].transpose() * delta;
      }
      break;
    }

    MatrixXd upstream;
    upstream.noalias() = params.weights[l - 1].transpose() * delta;
    const int prev = l - 1;  // hidden layer whose activation feeds layer l
    if (cache.masked && prev == arch.dropout_site) {
      if (mask_grad != nullptr) {
        *mask_grad = upstream.array() * cache.site_unmasked.array();
      }
      upstream.array() *= cache.site_mask.array();
    }
    const double slope = arch.leaky_slope;
    delta = upstream.cwiseProduct(cache.preacts[prev - 1].unaryExpr(
        [slope](double z) { return z > 0.0 ? 1.0 : slope; }));
  }
}

double forward(const NetworkParams& params, const Architecture& arch,
               const VectorXd& x, const VectorXd* dropout_mask) {
  ForwardCache cache;
  MatrixXd inputs = x;
  if (dropout_mask != nullptr) {
    MatrixXd mask = *dropout_mask;
    forward_batch(params, arch, inputs, &mask, cache);
  } else {
    forward_batch(params, arch, inputs, nullptr, cache);
  }
  const double out = cache.acts.back()(0, 0);
  if (!std::isfinite(out)) {
    throw NumericOverflow("network forward produced a non-finite value");
  }
  return out;
}

VectorXd forward_many(const NetworkParams& params, const Architecture& arch,
                      const MatrixXd& inputs) {
  ForwardCache cache;
  forward_batch(params, arch, inputs, nullptr, cache);
  return cache.acts.back().transpose();
}

Gradients gradient(const NetworkParams& params, const Architecture& arch,
                   const MatrixXd& inputs, const MatrixXd& targets, double l2,
                   const MatrixXd* dropout_mask) {
  if (inputs.cols() == 0) throw InvalidArgument("gradient: empty batch");
  ForwardCache cache;
  forward_batch(params, arch, inputs, dropout_mask, cache);
  Gradients grads;
  backward_batch(params, arch, cache, targets, l2, grads);
  return grads;
}

void adam_step(NetworkParams& params, const Gradients& grads, AdamState& state,
               const TrainConfig& cfg) {
  state.step += 1;
  const double b1 = cfg.adam_beta1;
  const double b2 = cfg.adam_beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    state.m_weights[l] = b1 * state.m_weights[l] + (1.0 - b1) * grads.weights[l];
    state.v_weights[l] =
        b2 * state.v_weights[l].array() +
        (1.0 - b2) * grads.weights[l].array().square();
    params.weights[l].array() -=
        cfg.learning_rate * (state.m_weights[l].array() / correction1) /
        ((state.v_weights[l].array() / correction2).sqrt() + cfg.adam_epsilon);

    state.m_biases[l] = b1 * state.m_biases[l] + (1.0 - b1) * grads.biases[l];
    state.v_biases[l] = b2 * state.v_biases[l].array() +
                        (1.0 - b2) * grads.biases[l].array().square();
    params.biases[l].array() -=
        cfg.learning_rate * (state.m_biases[l].array() / correction1) /
        ((state.v_biases[l].array() / correction2).sqrt() + cfg.adam_epsilon);
  }
}

VectorXd bernoulli_mask(int width, double rate, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw InvalidArgument("dropout rate must lie in [0, 1)");
  }
  VectorXd mask(width);
  const double keep_scale = 1.0 / (1.0 - rate);
  for (int i = 0; i < width; ++i) {
    mask[i] = rng.uniform() < rate ? 0.0 : keep_scale;
  }
  return mask;
}

void pack_dataset(const Dataset& data, MatrixXd& inputs, MatrixXd& targets) {
  const Eigen::Index n = static_cast<Eigen::Index>(data.size());
  if (n == 0) throw InvalidArgument("dataset is empty");
  const Eigen::Index dim = data.inputs.front().size();
  inputs.resize(dim, n);
  targets.resize(1, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    inputs.col(i) = data.inputs[static_cast<std::size_t>(i)];
    targets(0, i) = data.targets[static_cast<std::size_t>(i)];
  }
}

NetworkParams train(const Architecture& arch, const Dataset& data,
                    const TrainConfig& cfg,
                    std::optional<double> dropout_rate) {
  arch.validate();
  cfg.validate(data.size());
  if (dropout_rate && !(*dropout_rate >= 0.0 && *dropout_rate < 1.0)) {
    throw InvalidArgument("dropout rate must lie in [0, 1)");
  }

  const std::size_t n = data.size();
  const int batch = cfg.resolve_batch(n);
  const double l2 = cfg.resolve_l2(n);

  NetworkParams params = init_xavier(arch, mix_seed(cfg.seed, SeedPurpose::kInit));
  if (cfg.epochs == 0) return params;

  AdamState state = make_adam_state(params);
  Rng shuffle_rng(mix_seed(cfg.seed, SeedPurpose::kShuffle));
  Rng mask_rng(mix_seed(cfg.seed, SeedPurpose::kNoise));

  MatrixXd all_inputs, all_targets;
  pack_dataset(data, all_inputs, all_targets);

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);

  ForwardCache cache;
  Gradients grads;
  MatrixXd batch_inputs(all_inputs.rows(), batch);
  MatrixXd batch_targets(1, batch);
  std::size_t step = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    for (std::size_t start = 0; start < n; start += batch) {
      const Eigen::Index this_batch =
          static_cast<Eigen::Index>(std::min<std::size_t>(batch, n - start));
      batch_inputs.resize(all_inputs.rows(), this_batch);
      batch_targets.resize(1, this_batch);
      for (Eigen::Index i = 0; i < this_batch; ++i) {
        const int idx = order[start + i];
        batch_inputs.col(i) = all_inputs.col(idx);
        batch_targets(0, i) = all_targets(0, idx);
      }

      if (dropout_rate) {
        const VectorXd mask_vec =
            bernoulli_mask(arch.site_width(), *dropout_rate, mask_rng);
        const MatrixXd mask = mask_vec.replicate(1, this_batch);
        forward_batch(params, arch, batch_inputs, &mask, cache);
      } else {
        forward_batch(params, arch, batch_inputs, nullptr, cache);
      }
      backward_batch(params, arch, cache, batch_targets, l2, grads);
      if (!std::isfinite(grads.loss)) {
        throw TrainingDiverged(
            "training loss became non-finite at step " + std::to_string(step),
            step);
      }
      adam_step(params, grads, state, cfg);
      ++step;
    }
  }
  return params;
}

}  // namespace uqbench
