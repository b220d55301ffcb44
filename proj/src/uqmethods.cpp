#include "uqbench/uqmethods.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "uqbench/errors.hpp"
#include "uqbench/rng.hpp"

namespace uqbench {

void DropoutSpec::validate() const {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw InvalidArgument("dropout spec: rate must lie in [0, 1)");
  }
  if (mc_samples < 2) {
    throw InvalidArgument("dropout spec: mc_samples must be >= 2");
  }
  if (!(temperature > 0.0)) {
    throw InvalidArgument("dropout spec: temperature must be positive");
  }
  if (!(init_rate > 0.0 && init_rate < 1.0)) {
    throw InvalidArgument("dropout spec: init_rate must lie in (0, 1)");
  }
  if (reg_scale < 0.0 || kl_weight < 0.0) {
    throw InvalidArgument("dropout spec: regularizer weights must be >= 0");
  }
  if (!(alpha_init >= 0.0) || !(alpha_max > 0.0)) {
    throw InvalidArgument("dropout spec: alpha parameters out of range");
  }
}

void EnsembleSpec::validate() const {
  if (members < 2) {
    throw InvalidArgument("ensemble spec: members must be >= 2");
  }
  if (mode == EnsembleMode::Adversarial && !(adversarial_epsilon > 0.0)) {
    throw InvalidArgument("ensemble spec: adversarial epsilon must be positive");
  }
  if (bootstrap_batch < 0) {
    throw InvalidArgument("ensemble spec: bootstrap batch must be >= 0");
  }
}

namespace {

constexpr double kAlphaFloor = 1e-8;

// Kingma et al. cubic approximation of the variational-dropout KL term,
// valid for alpha <= 1.
constexpr double kKlC1 = 1.16145124;
constexpr double kKlC2 = -1.50204118;
constexpr double kKlC3 = 0.58629921;

double vd_kl(double alpha) {
  return -(0.5 * std::log(alpha) + kKlC1 * alpha + kKlC2 * alpha * alpha +
           kKlC3 * alpha * alpha * alpha);
}

double vd_kl_dalpha(double alpha) {
  return -(0.5 / alpha + kKlC1 + 2.0 * kKlC2 * alpha +
           3.0 * kKlC3 * alpha * alpha);
}

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

double bernoulli_entropy(double r) {
  return -r * std::log(r) - (1.0 - r) * std::log(1.0 - r);
}

// Shared mini-batch loop used by the learned-dropout trainers; mirrors
// nn::train's seed discipline so methods stay individually replayable.
struct BatchPlan {
  MatrixXd all_inputs, all_targets;
  std::vector<int> order;
  MatrixXd batch_inputs, batch_targets;
  Rng shuffle_rng;
  std::size_t n;
  int batch;

  BatchPlan(const Dataset& data, const TrainConfig& cfg)
      : shuffle_rng(mix_seed(cfg.seed, SeedPurpose::kShuffle)),
        n(data.size()),
        batch(cfg.resolve_batch(data.size())) {
    pack_dataset(data, all_inputs, all_targets);
    order.resize(n);
    std::iota(order.begin(), order.end(), 0);
  }

  void start_epoch() { shuffle_rng.shuffle(order); }

  Eigen::Index load(std::size_t start) {
    const Eigen::Index this_batch =
        static_cast<Eigen::Index>(std::min<std::size_t>(batch, n - start));
    batch_inputs.resize(all_inputs.rows(), this_batch);
    batch_targets.resize(1, this_batch);
    for (Eigen::Index i = 0; i < this_batch; ++i) {
      const int idx = order[start + i];
      batch_inputs.col(i) = all_inputs.col(idx);
      batch_targets(0, i) = all_targets(0, idx);
    }
    return this_batch;
  }
};

void check_step_finite(double loss, std::size_t step) {
  if (!std::isfinite(loss)) {
    throw TrainingDiverged(
        "training loss became non-finite at step " + std::to_string(step), step);
  }
}

// Scalar/vector Adam accumulators for the learned noise parameters.
struct ExtraAdam {
  VectorXd m, v;
  explicit ExtraAdam(Eigen::Index size)
      : m(VectorXd::Zero(size)), v(VectorXd::Zero(size)) {}

  void step(VectorXd& value, const VectorXd& grad, long t,
            const TrainConfig& cfg) {
    const double c1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(t));
    m = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * grad;
    v = cfg.adam_beta2 * v.array() + (1.0 - cfg.adam_beta2) * grad.array().square();
    value.array() -= cfg.learning_rate * (m.array() / c1) /
                     ((v.array() / c2).sqrt() + cfg.adam_epsilon);
  }
};

double safe_uniform_open(Rng& rng) {
  // keep log(u) and log(1-u) finite
  const double u = rng.uniform();
  return std::min(std::max(u, 1e-12), 1.0 - 1e-12);
}

UqPrediction summarize_samples(std::vector<double>& values) {
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  if (values.size() < 2) return UqPrediction{mean, 0.0};
  double ss = 0.0;
  for (double v : values) {
    const double d = v - mean;
    ss += d * d;
  }
  const double var = ss / static_cast<double>(values.size() - 1);
  return UqPrediction{mean, std::sqrt(std::max(0.0, var))};
}

// Monte-Carlo prediction: one batched forward with the input replicated and
// an independent mask per column.
template <typename MaskColumnFiller>
UqPrediction mc_predict(const NetworkParams& params, const Architecture& arch,
                        const VectorXd& x, int mc_samples,
                        MaskColumnFiller&& fill_column) {
  if (mc_samples < 2) {
    throw InvalidArgument("mc prediction requires mc_samples >= 2");
  }
  const MatrixXd inputs = x.replicate(1, mc_samples);
  MatrixXd mask(arch.site_width(), mc_samples);
  for (int s = 0; s < mc_samples; ++s) {
    fill_column(mask.col(s));
  }
  ForwardCache cache;
  forward_batch(params, arch, inputs, &mask, cache);
  std::vector<double> outs(static_cast<std::size_t>(mc_samples));
  for (int s = 0; s < mc_samples; ++s) outs[s] = cache.acts.back()(0, s);
  return summarize_samples(outs);
}

UqPrediction deterministic_prediction(const DropoutModel& model,
                                      const VectorXd& x) {
  return UqPrediction{forward(model.params, model.arch, x), 0.0};
}

}  // namespace

DropoutModel train_bd(const Architecture& arch, const Dataset& data,
                      const TrainConfig& cfg, const DropoutSpec& spec) {
  spec.validate();
  if (spec.mode != DropoutMode::FixedRate) {
    throw InvalidArgument("train_bd expects a FixedRate spec");
  }
  DropoutModel model{arch, train(arch, data, cfg, spec.rate), spec, spec.rate,
                     VectorXd()};
  return model;
}

DropoutModel train_cd(const Architecture& arch, const Dataset& data,
                      const TrainConfig& cfg, const DropoutSpec& spec) {
  arch.validate();
  cfg.validate(data.size());
  spec.validate();
  if (spec.mode != DropoutMode::Concrete) {
    throw InvalidArgument("train_cd expects a Concrete spec");
  }

  const double l2 = cfg.resolve_l2(data.size());
  NetworkParams params = init_xavier(arch, mix_seed(cfg.seed, SeedPurpose::kInit));
  double logit = std::log(spec.init_rate / (1.0 - spec.init_rate));

  DropoutModel model{arch, params, spec, spec.init_rate, VectorXd()};
  if (cfg.epochs == 0) return model;

  AdamState state = make_adam_state(params);
  ExtraAdam logit_adam(1);
  Rng mask_rng(mix_seed(cfg.seed, SeedPurpose::kNoise));
  BatchPlan plan(data, cfg);

  const int site_width = arch.site_width();
  const int next_weights = arch.dropout_site;  // 0-based index of W after site
  ForwardCache cache;
  Gradients grads;
  MatrixXd mask_grad;
  VectorXd z(site_width);
  std::size_t step = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    plan.start_epoch();
    for (std::size_t start = 0; start < plan.n; start += plan.batch) {
      const Eigen::Index this_batch = plan.load(start);
      const double rate = sigmoid(logit);

      VectorXd mask_vec(site_width);
      for (int u = 0; u < site_width; ++u) {
        const double draw = safe_uniform_open(mask_rng);
        z[u] = sigmoid((logit + std::log(draw) - std::log(1.0 - draw)) /
                       spec.temperature);
        mask_vec[u] = (1.0 - z[u]) / (1.0 - rate);
      }
      const MatrixXd mask = mask_vec.replicate(1, this_batch);
      forward_batch(params, arch, plan.batch_inputs, &mask, cache);
      backward_batch(params, arch, cache, plan.batch_targets, l2, grads,
                     nullptr, &mask_grad);

      // Chain the data term into the logit through the relaxed mask.
      double logit_grad = 0.0;
      for (int u = 0; u < site_width; ++u) {
        const double dz = z[u] * (1.0 - z[u]) / spec.temperature;
        const double dmask = -dz / (1.0 - rate) +
                             (1.0 - z[u]) * rate / (1.0 - rate);
        logit_grad += mask_grad.row(u).sum() * dmask;
      }

      // Concrete-dropout regularizer: weight magnitude of the consuming
      // layer, discounted by the keep probability, minus the mask entropy.
      const MatrixXd& w_next = params.weights[next_weights];
      const double w_norm2 = w_next.squaredNorm();
      const double reg = spec.reg_scale * ((1.0 - rate) * w_norm2 -
                                           site_width * bernoulli_entropy(rate));
      grads.weights[next_weights] +=
          spec.reg_scale * (1.0 - rate) * 2.0 * w_next;
      logit_grad += spec.reg_scale *
                    (-w_norm2 - site_width * std::log((1.0 - rate) / rate)) *
                    rate * (1.0 - rate);
      grads.loss += reg;

      check_step_finite(grads.loss, step);
      adam_step(params, grads, state, cfg);
      VectorXd logit_vec = VectorXd::Constant(1, logit);
      logit_adam.step(logit_vec, VectorXd::Constant(1, logit_grad), state.step,
                      cfg);
      logit = logit_vec[0];
      ++step;
    }
  }

  model.params = std::move(params);
  model.learned_rate = sigmoid(logit);
  return model;
}

DropoutModel train_vd(const Architecture& arch, const Dataset& data,
                      const TrainConfig& cfg, const DropoutSpec& spec) {
  arch.validate();
  cfg.validate(data.size());
  spec.validate();
  if (spec.mode != DropoutMode::Variational) {
    throw InvalidArgument("train_vd expects a Variational spec");
  }

  const double l2 = cfg.resolve_l2(data.size());
  const int site_width = arch.site_width();
  NetworkParams params = init_xavier(arch, mix_seed(cfg.seed, SeedPurpose::kInit));
  VectorXd log_alpha = VectorXd::Constant(
      site_width, std::log(std::max(spec.alpha_init, kAlphaFloor)));

  DropoutModel model{arch, params, spec, 0.0, log_alpha};
  if (cfg.epochs == 0) return model;

  AdamState state = make_adam_state(params);
  ExtraAdam alpha_adam(site_width);
  Rng noise_rng(mix_seed(cfg.seed, SeedPurpose::kNoise));
  BatchPlan plan(data, cfg);

  const double log_alpha_max = std::log(spec.alpha_max);
  const double log_alpha_min = std::log(kAlphaFloor);
  ForwardCache cache;
  Gradients grads;
  MatrixXd mask_grad;
  std::size_t step = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    plan.start_epoch();
    for (std::size_t start = 0; start < plan.n; start += plan.batch) {
      const Eigen::Index this_batch = plan.load(start);
      const VectorXd alpha = log_alpha.array().exp();
      const VectorXd root_alpha = alpha.array().sqrt();

      // Local reparameterization: independent noise per unit and sample.
      MatrixXd eps(site_width, this_batch);
      for (Eigen::Index b = 0; b < this_batch; ++b) {
        for (int u = 0; u < site_width; ++u) eps(u, b) = noise_rng.normal();
      }
      const MatrixXd mask =
          ((eps.array().colwise() * root_alpha.array()) + 1.0).matrix();
      forward_batch(params, arch, plan.batch_inputs, &mask, cache);
      backward_batch(params, arch, cache, plan.batch_targets, l2, grads,
                     nullptr, &mask_grad);

      VectorXd alpha_grad = VectorXd::Zero(site_width);
      for (int u = 0; u < site_width; ++u) {
        alpha_grad[u] = 0.5 * root_alpha[u] *
                        (mask_grad.row(u).array() * eps.row(u).array()).sum();
      }
      for (int u = 0; u < site_width; ++u) {
        grads.loss += spec.kl_weight * vd_kl(alpha[u]);
        alpha_grad[u] += spec.kl_weight * vd_kl_dalpha(alpha[u]) * alpha[u];
      }

      check_step_finite(grads.loss, step);
      adam_step(params, grads, state, cfg);
      alpha_adam.step(log_alpha, alpha_grad, state.step, cfg);
      log_alpha = log_alpha.array().min(log_alpha_max).max(log_alpha_min);
      ++step;
    }
  }

  model.params = std::move(params);
  model.log_alpha = std::move(log_alpha);
  return model;
}

UqPrediction predict_bd(const DropoutModel& model, const VectorXd& x,
                        int mc_samples, std::uint64_t seed) {
  const double rate = model.spec.mode == DropoutMode::Concrete
                          ? model.learned_rate
                          : model.spec.rate;
  if (rate == 0.0) return deterministic_prediction(model, x);
  Rng rng(mix_seed(seed, SeedPurpose::kPrediction));
  const double keep_scale = 1.0 / (1.0 - rate);
  return mc_predict(model.params, model.arch, x, mc_samples,
                    [&](auto column) {
                      for (Eigen::Index u = 0; u < column.size(); ++u) {
                        column[u] = rng.uniform() < rate ? 0.0 : keep_scale;
                      }
                    });
}

UqPrediction predict_variational(const DropoutModel& model, const VectorXd& x,
                                 int mc_samples, std::uint64_t seed) {
  if (model.spec.mode == DropoutMode::Concrete) {
    // Hard Bernoulli masks at the learned rate; the relaxation is only a
    // training device.
    return predict_bd(model, x, mc_samples, seed);
  }
  const VectorXd alpha = model.log_alpha.array().exp();
  if (alpha.size() == 0 || alpha.maxCoeff() == 0.0) {
    return deterministic_prediction(model, x);
  }
  const VectorXd root_alpha = alpha.array().sqrt();
  Rng rng(mix_seed(seed, SeedPurpose::kPrediction));
  return mc_predict(model.params, model.arch, x, mc_samples,
                    [&](auto column) {
                      for (Eigen::Index u = 0; u < column.size(); ++u) {
                        column[u] = 1.0 + root_alpha[u] * rng.normal();
                      }
                    });
}

UqPrediction predict_dropout(const DropoutModel& model, const VectorXd& x,
                             int mc_samples, std::uint64_t seed) {
  switch (model.spec.mode) {
    case DropoutMode::FixedRate:
      return predict_bd(model, x, mc_samples, seed);
    case DropoutMode::Concrete:
    case DropoutMode::Variational:
      return predict_variational(model, x, mc_samples, seed);
  }
  throw InvalidArgument("unknown dropout mode");
}

MatrixXd fgsm_examples(const NetworkParams& params, const Architecture& arch,
                       const MatrixXd& inputs, const MatrixXd& targets,
                       double l2, double epsilon) {
  ForwardCache cache;
  Gradients grads;
  MatrixXd input_grad;
  forward_batch(params, arch, inputs, nullptr, cache);
  backward_batch(params, arch, cache, targets, l2, grads, &input_grad);
  return inputs + epsilon * input_grad.array().sign().matrix();
}

namespace {

NetworkParams train_member_adversarial(const Architecture& arch,
                                       const Dataset& data,
                                       const TrainConfig& cfg,
                                       double epsilon) {
  const double l2 = cfg.resolve_l2(data.size());
  NetworkParams params = init_xavier(arch, mix_seed(cfg.seed, SeedPurpose::kInit));
  if (cfg.epochs == 0) return params;

  AdamState state = make_adam_state(params);
  BatchPlan plan(data, cfg);
  ForwardCache cache;
  Gradients grads;
  std::size_t step = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    plan.start_epoch();
    for (std::size_t start = 0; start < plan.n; start += plan.batch) {
      const Eigen::Index this_batch = plan.load(start);
      const MatrixXd adversarial = fgsm_examples(
          params, arch, plan.batch_inputs, plan.batch_targets, l2, epsilon);

      MatrixXd combined_inputs(plan.batch_inputs.rows(), 2 * this_batch);
      combined_inputs << plan.batch_inputs, adversarial;
      MatrixXd combined_targets(1, 2 * this_batch);
      combined_targets << plan.batch_targets, plan.batch_targets;

      forward_batch(params, arch, combined_inputs, nullptr, cache);
      backward_batch(params, arch, cache, combined_targets, l2, grads);
      check_step_finite(grads.loss, step);
      adam_step(params, grads, state, cfg);
      ++step;
    }
  }
  return params;
}

NetworkParams train_member_bootstrap(const Architecture& arch,
                                     const Dataset& data,
                                     const TrainConfig& cfg, int batch) {
  const double l2 = cfg.resolve_l2(data.size());
  NetworkParams params = init_xavier(arch, mix_seed(cfg.seed, SeedPurpose::kInit));
  if (cfg.epochs == 0) return params;

  AdamState state = make_adam_state(params);
  Rng draw_rng(mix_seed(cfg.seed, SeedPurpose::kShuffle));
  MatrixXd all_inputs, all_targets;
  pack_dataset(data, all_inputs, all_targets);
  const std::size_t n = data.size();
  const std::size_t ubatch = static_cast<std::size_t>(batch);
  const int steps_per_epoch = static_cast<int>((n + ubatch - 1) / ubatch);

  ForwardCache cache;
  Gradients grads;
  MatrixXd batch_inputs(all_inputs.rows(), batch);
  MatrixXd batch_targets(1, batch);
  std::size_t step = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (int s = 0; s < steps_per_epoch; ++s) {
      // pull-with-back: indices drawn with replacement
      for (int i = 0; i < batch; ++i) {
        const auto idx = static_cast<Eigen::Index>(draw_rng.below(n));
        batch_inputs.col(i) = all_inputs.col(idx);
        batch_targets(0, i) = all_targets(0, idx);
      }
      forward_batch(params, arch, batch_inputs, nullptr, cache);
      backward_batch(params, arch, cache, batch_targets, l2, grads);
      check_step_finite(grads.loss, step);
      adam_step(params, grads, state, cfg);
      ++step;
    }
  }
  return params;
}

}  // namespace

EnsembleModel train_ensemble(const Architecture& arch, const Dataset& data,
                             const TrainConfig& cfg, const EnsembleSpec& spec) {
  arch.validate();
  cfg.validate(data.size());
  spec.validate();

  EnsembleModel model{arch, {}, spec};
  model.members.reserve(spec.members);
  const int bootstrap_batch =
      spec.bootstrap_batch > 0 ? spec.bootstrap_batch
                               : std::max(1, static_cast<int>(data.size()) / 2);

  for (int m = 0; m < spec.members; ++m) {
    TrainConfig member_cfg = cfg;
    member_cfg.seed = mix_seed(cfg.seed, SeedPurpose::kMember,
                               static_cast<std::uint64_t>(m));
    try {
      switch (spec.mode) {
        case EnsembleMode::Standard:
          model.members.push_back(train(arch, data, member_cfg));
          break;
        case EnsembleMode::Adversarial:
          model.members.push_back(train_member_adversarial(
              arch, data, member_cfg, spec.adversarial_epsilon));
          break;
        case EnsembleMode::Bootstrap:
          model.members.push_back(
              train_member_bootstrap(arch, data, member_cfg, bootstrap_batch));
          break;
      }
    } catch (const TrainingDiverged& err) {
      throw TrainingDiverged("ensemble member " + std::to_string(m) + ": " +
                                 err.what(),
                             err.step());
    }
  }
  return model;
}

UqPrediction predict_ensemble(const EnsembleModel& model, const VectorXd& x) {
  if (model.members.empty()) {
    throw InvalidArgument("predict_ensemble: empty ensemble");
  }
  std::vector<double> outs;
  outs.reserve(model.members.size());
  for (const NetworkParams& member : model.members) {
    outs.push_back(forward(member, model.arch, x));
  }
  return summarize_samples(outs);
}

std::vector<UqPrediction> predict_ensemble_many(const EnsembleModel& model,
                                                const MatrixXd& inputs) {
  if (model.members.empty()) {
    throw InvalidArgument("predict_ensemble: empty ensemble");
  }
  const Eigen::Index count = inputs.cols();
  MatrixXd outs(static_cast<Eigen::Index>(model.members.size()), count);
  for (std::size_t m = 0; m < model.members.size(); ++m) {
    outs.row(static_cast<Eigen::Index>(m)) =
        forward_many(model.members[m], model.arch, inputs).transpose();
  }
  std::vector<UqPrediction> preds;
  preds.reserve(count);
  std::vector<double> column(model.members.size());
  for (Eigen::Index i = 0; i < count; ++i) {
    for (std::size_t m = 0; m < model.members.size(); ++m) {
      column[m] = outs(static_cast<Eigen::Index>(m), i);
    }
    preds.push_back(summarize_samples(column));
  }
  return preds;
}

}  // namespace uqbench
