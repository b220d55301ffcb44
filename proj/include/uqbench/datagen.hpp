#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "uqbench/basis.hpp"

namespace uqbench {

/// Basis + true coefficients + known noise level: the ground-truth oracle
/// behind every experiment.
struct GenerativeModel {
  GenerativeModel(BasisFunction basis, VectorXd gamma, double sigma);

  BasisFunction basis;
  VectorXd gamma;
  double sigma;

  double truth_at(const VectorXd& x) const {
    return ground_truth(basis, gamma, x);
  }
};

/// Paired training data; `seed` is the noise seed that produced `targets`.
struct Dataset {
  std::vector<VectorXd> inputs;
  std::vector<double> targets;
  std::uint64_t seed = 0;

  std::size_t size() const { return inputs.size(); }
};

enum class DesignKind {
  UniformRandomBox,
  EquidistantGrid1D,
  Diagonal,
  RegularGrid2D
};

/// Placement rule for a set of inputs inside a box.
struct InputDesign {
  DesignKind kind;
  std::vector<double> lo;  // per-dimension lower bounds
  std::vector<double> hi;  // per-dimension upper bounds
  int count = 0;
  std::vector<double> lambda_values;  // Diagonal only, each in [0, 1]

  int dim() const { return static_cast<int>(lo.size()); }
  void validate() const;
};

InputDesign uniform_box_design(std::vector<double> lo, std::vector<double> hi,
                               int count);
InputDesign equidistant_grid_1d(double lo, double hi, int count);
InputDesign diagonal_design(double lo, double hi, int dim,
                            std::vector<double> lambda_values);
/// ceil(sqrt(count))^2 lattice points, endpoints inclusive.
InputDesign regular_grid_2d(double lo, double hi, int count);

/// Equidistant lambda grid on [0, 1], endpoints inclusive.
std::vector<double> equidistant_lambdas(int count);

/// p independent draws from Uniform[0, 1].
VectorXd sample_gamma(int p, std::uint64_t rng_seed);

/// Materializes the design; random kinds are driven by rng_seed, grid kinds
/// ignore it.
std::vector<VectorXd> design_inputs(const InputDesign& design,
                                    std::uint64_t rng_seed);

/// y_i = G(x_i)^T gamma + eps_i, eps_i iid N(0, sigma^2).  Inputs are copied
/// into the Dataset unchanged.
Dataset sample_observations(const GenerativeModel& model,
                            const std::vector<VectorXd>& inputs,
                            std::uint64_t rng_seed);

enum class ExperimentId { E1, E2, E3 };

const char* experiment_name(ExperimentId id);
ExperimentId experiment_from_name(const std::string& name);

/// One benchmark configuration: the generative model plus train/test input
/// designs and the derived seeds needed to materialize them.  The whole
/// struct is a pure function of (id, complexity, master_seed).
struct ExperimentPreset {
  ExperimentId id;
  int complexity;
  std::uint64_t master_seed;
  GenerativeModel model;
  InputDesign train_design;
  InputDesign test_design;
  std::uint64_t train_input_seed;

  std::vector<VectorXd> train_inputs() const {
    return design_inputs(train_design, train_input_seed);
  }
  std::vector<VectorXd> test_inputs() const {
    return design_inputs(test_design, 0);
  }
  /// Membership test against the training box (closed).
  bool in_train_box(const VectorXd& x) const;
  /// Paper protocol: epochs scale as 300 * complexity.
  int default_epochs() const { return 300 * complexity; }
};

/// E1: sinusoidal basis at f_main = complexity, gamma ~ U[0,1]^4, sigma 0.75,
///     50 uniform train points in [-4,4], 1000 equidistant test points in [-6,6].
/// E2: Styblinski basis at d = complexity, gamma = (2.5,-8,0.5) repeated,
///     sigma 3, 100*9^(d-1) uniform train points in [-4,4]^d, diagonal test
///     grid over [-5,5]^d (200 lambdas).
/// E3: 2-D polynomial basis, gamma ~ U[0,1]^6, sigma 0.5, 450 uniform train
///     points in [-4,4]^2, 21x21 regular test grid over [-5,5]^2.
ExperimentPreset experiment_preset(ExperimentId id, int complexity,
                                   std::uint64_t master_seed);

}  // namespace uqbench
