#include "uqbench/datagen.hpp"

#include <cmath>
#include <string>

#include "uqbench/errors.hpp"
#include "uqbench/rng.hpp"

namespace uqbench {

GenerativeModel::GenerativeModel(BasisFunction basis_in, VectorXd gamma_in,
                                 double sigma_in)
    : basis(std::move(basis_in)), gamma(std::move(gamma_in)), sigma(sigma_in) {
  if (gamma.size() != basis.output_dim()) {
    throw InvalidArgument("generative model: gamma has dimension " +
                          std::to_string(gamma.size()) + ", basis expects " +
                          std::to_string(basis.output_dim()));
  }
  if (!(sigma > 0.0)) {
    throw InvalidArgument("generative model: sigma must be positive");
  }
}

void InputDesign::validate() const {
  if (lo.size() != hi.size() || lo.empty()) {
    throw InvalidArgument("input design: bounds must be non-empty and paired");
  }
  for (std::size_t i = 0; i < lo.size(); ++i) {
    if (!(lo[i] < hi[i])) {
      throw InvalidArgument("input design: requires lo < hi per dimension");
    }
  }
  if (count < 1) {
    throw InvalidArgument("input design: count must be >= 1");
  }
  if (kind == DesignKind::Diagonal) {
    if (lambda_values.size() != static_cast<std::size_t>(count)) {
      throw InvalidArgument("diagonal design: count must match lambda list");
    }
    for (double l : lambda_values) {
      if (!(l >= 0.0 && l <= 1.0)) {
        throw InvalidArgument("diagonal design: lambda outside [0, 1]");
      }
    }
  } else if (!lambda_values.empty()) {
    throw InvalidArgument("input design: lambda list only valid for Diagonal");
  }
  if (kind == DesignKind::EquidistantGrid1D && lo.size() != 1) {
    throw InvalidArgument("equidistant grid design is one-dimensional");
  }
  if (kind == DesignKind::RegularGrid2D && lo.size() != 2) {
    throw InvalidArgument("regular grid design is two-dimensional");
  }
}

InputDesign uniform_box_design(std::vector<double> lo, std::vector<double> hi,
                               int count) {
  InputDesign d{DesignKind::UniformRandomBox, std::move(lo), std::move(hi),
                count, {}};
  d.validate();
  return d;
}

InputDesign equidistant_grid_1d(double lo, double hi, int count) {
  InputDesign d{DesignKind::EquidistantGrid1D, {lo}, {hi}, count, {}};
  d.validate();
  return d;
}

InputDesign diagonal_design(double lo, double hi, int dim,
                            std::vector<double> lambda_values) {
  InputDesign d{DesignKind::Diagonal, std::vector<double>(dim, lo),
                std::vector<double>(dim, hi),
                static_cast<int>(lambda_values.size()),
                std::move(lambda_values)};
  d.validate();
  return d;
}

InputDesign regular_grid_2d(double lo, double hi, int count) {
  InputDesign d{DesignKind::RegularGrid2D, {lo, lo}, {hi, hi}, count, {}};
  d.validate();
  return d;
}

std::vector<double> equidistant_lambdas(int count) {
  if (count < 1) throw InvalidArgument("lambda grid: count must be >= 1");
  std::vector<double> lambdas(count);
  if (count == 1) {
    lambdas[0] = 0.0;
    return lambdas;
  }
  for (int i = 0; i < count; ++i) {
    lambdas[i] = static_cast<double>(i) / (count - 1);
  }
  return lambdas;
}

VectorXd sample_gamma(int p, std::uint64_t rng_seed) {
  if (p < 1) throw InvalidArgument("sample_gamma: p must be >= 1");
  Rng rng(rng_seed);
  VectorXd gamma(p);
  for (int i = 0; i < p; ++i) gamma[i] = rng.uniform();
  return gamma;
}

std::vector<VectorXd> design_inputs(const InputDesign& design,
                                    std::uint64_t rng_seed) {
  design.validate();
  const int dim = design.dim();
  std::vector<VectorXd> points;
  switch (design.kind) {
    case DesignKind::UniformRandomBox: {
      Rng rng(rng_seed);
      points.reserve(design.count);
      for (int i = 0; i < design.count; ++i) {
        VectorXd x(dim);
        for (int j = 0; j < dim; ++j) {
          x[j] = rng.uniform(design.lo[j], design.hi[j]);
        }
        points.push_back(std::move(x));
      }
      break;
    }
    case DesignKind::EquidistantGrid1D: {
      points.reserve(design.count);
      for (int i = 0; i < design.count; ++i) {
        const double t = design.count == 1
                             ? 0.0
                             : static_cast<double>(i) / (design.count - 1);
        VectorXd x(1);
        x[0] = design.lo[0] + t * (design.hi[0] - design.lo[0]);
        points.push_back(std::move(x));
      }
      break;
    }
    case DesignKind::Diagonal: {
      points.reserve(design.lambda_values.size());
      for (double lambda : design.lambda_values) {
        VectorXd x(dim);
        for (int j = 0; j < dim; ++j) {
          x[j] = (1.0 - lambda) * design.lo[j] + lambda * design.hi[j];
        }
        points.push_back(std::move(x));
      }
      break;
    }
    case DesignKind::RegularGrid2D: {
      const int side =
          static_cast<int>(std::ceil(std::sqrt(static_cast<double>(design.count))));
      points.reserve(static_cast<std::size_t>(side) * side);
      for (int i = 0; i < side; ++i) {
        for (int j = 0; j < side; ++j) {
          const double ti = side == 1 ? 0.0 : static_cast<double>(i) / (side - 1);
          const double tj = side == 1 ? 0.0 : static_cast<double>(j) / (side - 1);
          VectorXd x(2);
          x[0] = design.lo[0] + ti * (design.hi[0] - design.lo[0]);
          x[1] = design.lo[1] + tj * (design.hi[1] - design.lo[1]);
          points.push_back(std::move(x));
        }
      }
      break;
    }
  }
  return points;
}

Dataset sample_observations(const GenerativeModel& model,
                            const std::vector<VectorXd>& inputs,
                            std::uint64_t rng_seed) {
  if (inputs.empty()) {
    throw InvalidArgument("sample_observations: no inputs");
  }
  Rng rng(rng_seed);
  Dataset data;
  data.seed = rng_seed;
  data.inputs = inputs;
  data.targets.reserve(inputs.size());
  for (const VectorXd& x : inputs) {
    data.targets.push_back(model.truth_at(x) + rng.normal(0.0, model.sigma));
  }
  return data;
}

const char* experiment_name(ExperimentId id) {
  switch (id) {
    case ExperimentId::E1: return "E1";
    case ExperimentId::E2: return "E2";
    case ExperimentId::E3: return "E3";
  }
  return "?";
}

ExperimentId experiment_from_name(const std::string& name) {
  if (name == "E1") return ExperimentId::E1;
  if (name == "E2") return ExperimentId::E2;
  if (name == "E3") return ExperimentId::E3;
  throw InvalidArgument("unknown experiment id: " + name);
}

bool ExperimentPreset::in_train_box(const VectorXd& x) const {
  for (int j = 0; j < train_design.dim(); ++j) {
    if (x[j] < train_design.lo[j] || x[j] > train_design.hi[j]) return false;
  }
  return true;
}

namespace {
constexpr int kDiagonalTestLambdas = 200;
constexpr int kRegularGridTestCount = 441;  // 21 x 21
}  // namespace

ExperimentPreset experiment_preset(ExperimentId id, int complexity,
                                   std::uint64_t master_seed) {
  if (complexity < 1) {
    throw InvalidArgument("experiment preset: complexity must be >= 1");
  }
  const std::uint64_t gamma_seed = mix_seed(master_seed, SeedPurpose::kGammaDraw);
  const std::uint64_t train_seed = mix_seed(master_seed, SeedPurpose::kTrainInputs);
  switch (id) {
    case ExperimentId::E1: {
      BasisFunction basis = make_sinusoidal_basis(complexity);
      GenerativeModel model(basis, sample_gamma(4, gamma_seed), 0.75);
      return ExperimentPreset{id,
                              complexity,
                              master_seed,
                              std::move(model),
                              uniform_box_design({-4.0}, {4.0}, 50),
                              equidistant_grid_1d(-6.0, 6.0, 1000),
                              train_seed};
    }
    case ExperimentId::E2: {
      const int d = complexity;
      BasisFunction basis = make_styblinski_basis(d);
      VectorXd gamma(3 * d);
      for (int j = 0; j < d; ++j) {
        gamma[3 * j] = 2.5;
        gamma[3 * j + 1] = -8.0;
        gamma[3 * j + 2] = 0.5;
      }
      GenerativeModel model(basis, std::move(gamma), 3.0);
      int n_train = 100;
      for (int j = 1; j < d; ++j) n_train *= 9;
      return ExperimentPreset{
          id,
          complexity,
          master_seed,
          std::move(model),
          uniform_box_design(std::vector<double>(d, -4.0),
                             std::vector<double>(d, 4.0), n_train),
          diagonal_design(-5.0, 5.0, d, equidistant_lambdas(kDiagonalTestLambdas)),
          train_seed};
    }
    case ExperimentId::E3: {
      BasisFunction basis = make_polynomial_basis();
      GenerativeModel model(basis, sample_gamma(6, gamma_seed), 0.5);
      return ExperimentPreset{id,
                              complexity,
                              master_seed,
                              std::move(model),
                              uniform_box_design({-4.0, -4.0}, {4.0, 4.0}, 450),
                              regular_grid_2d(-5.0, 5.0, kRegularGridTestCount),
                              train_seed};
    }
  }
  throw InvalidArgument("unknown experiment id");
}

}  // namespace uqbench
