#pragma once

#include <cstdint>
#include <vector>

#include "uqbench/nn.hpp"
#include "uqbench/prediction.hpp"

namespace uqbench {

enum class DropoutMode { FixedRate, Concrete, Variational };

struct DropoutSpec {
  DropoutMode mode = DropoutMode::FixedRate;
  double rate = 0.2;        // FixedRate drop probability
  int mc_samples = 100;
  double temperature = 0.1;  // Concrete relaxation temperature
  double init_rate = 0.1;    // Concrete initial rate (logit derived from it)
  double reg_scale = 1e-4;   // Concrete regularizer scale per unit
  double alpha_init = 0.01;  // Variational initial variance ratio
  double alpha_max = 1.0;    // Variational clip; the KL expansion holds below 1
  double kl_weight = 0.01;   // Variational KL weight (harness sets 2*sigma^2/N)

  void validate() const;
};

enum class EnsembleMode { Standard, Adversarial, Bootstrap };

struct EnsembleSpec {
  EnsembleMode mode = EnsembleMode::Standard;
  int members = 120;
  double adversarial_epsilon = 0.08;  // 1% of the [-4,4] training range
  int bootstrap_batch = 0;            // 0 -> |train| / 2

  void validate() const;
};

/// A trained dropout-family model: network weights plus whatever noise
/// parameters the method learned.
struct DropoutModel {
  Architecture arch;
  NetworkParams params;
  DropoutSpec spec;
  double learned_rate = 0.0;  // Concrete: sigmoid of the trained logit
  VectorXd log_alpha;         // Variational: per-unit log variance ratio
};

struct EnsembleModel {
  Architecture arch;
  std::vector<NetworkParams> members;
  EnsembleSpec spec;
};

// --- Dropout family ---------------------------------------------------------

/// Bernoulli/MC dropout: fixed rate, fresh per-batch mask at the site.
DropoutModel train_bd(const Architecture& arch, const Dataset& data,
                      const TrainConfig& cfg, const DropoutSpec& spec);

/// Concrete dropout: the rate's logit is optimized jointly with the weights
/// through a sigmoid-relaxed Bernoulli mask.
DropoutModel train_cd(const Architecture& arch, const Dataset& data,
                      const TrainConfig& cfg, const DropoutSpec& spec);

/// Variational dropout: per-unit multiplicative Gaussian noise a*(1+sqrt(alpha)*eps)
/// with alpha trained against the standard KL approximation.
DropoutModel train_vd(const Architecture& arch, const Dataset& data,
                      const TrainConfig& cfg, const DropoutSpec& spec);

/// Monte-Carlo prediction with fresh fixed-rate Bernoulli masks; sample std
/// uses the mc_samples - 1 denominator.
UqPrediction predict_bd(const DropoutModel& model, const VectorXd& x,
                        int mc_samples, std::uint64_t seed);

/// As predict_bd but sampling the method's own noise: hard Bernoulli masks at
/// the learned rate (Concrete), Gaussian multiplicative noise (Variational).
UqPrediction predict_variational(const DropoutModel& model, const VectorXd& x,
                                 int mc_samples, std::uint64_t seed);

/// Dispatch on model.spec.mode.
UqPrediction predict_dropout(const DropoutModel& model, const VectorXd& x,
                             int mc_samples, std::uint64_t seed);

// --- Ensemble family --------------------------------------------------------

/// Trains spec.members networks that differ by their derived member seed.
/// Adversarial mode augments every mini-batch with fast-gradient-sign
/// examples; Bootstrap mode draws mini-batches of size |train|/2 with
/// replacement.
EnsembleModel train_ensemble(const Architecture& arch, const Dataset& data,
                             const TrainConfig& cfg, const EnsembleSpec& spec);

/// Member mean and member sample standard deviation (M - 1 denominator).
/// Sums run over value-sorted outputs so member order cannot change a bit.
UqPrediction predict_ensemble(const EnsembleModel& model, const VectorXd& x);

/// One prediction per input column; forwards each member once over the
/// whole batch.
std::vector<UqPrediction> predict_ensemble_many(const EnsembleModel& model,
                                                const MatrixXd& inputs);

/// x' = x + eps * sign(d loss / d x), one column per sample, targets kept.
MatrixXd fgsm_examples(const NetworkParams& params, const Architecture& arch,
                       const MatrixXd& inputs, const MatrixXd& targets,
                       double l2, double epsilon);

}  // namespace uqbench
