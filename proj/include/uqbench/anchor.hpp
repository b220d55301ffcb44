#pragma once

#include <cstdint>
#include <vector>

#include "uqbench/basis.hpp"
#include "uqbench/datagen.hpp"
#include "uqbench/prediction.hpp"

namespace uqbench {

/// Exact posterior of Bayesian linear regression under the flat reference
/// prior: gamma | D ~ N(gamma_hat, sigma^2 * V).  V is the unscaled
/// covariance factor (normal-matrix inverse); sigma is the known noise std.
/// Immutable after fitting; safe for concurrent reads.
struct BlrPosterior {
  VectorXd gamma_hat;
  MatrixXd V;
  double sigma = 0.0;

  int dim() const { return static_cast<int>(gamma_hat.size()); }
};

inline constexpr double kDefaultConditionLimit = 1e12;

/// Core fit from an explicit p x N design matrix (columns G(x_i)).  Solves
/// the normal equations with a symmetric positive-definite factorization and
/// refuses ill-conditioned designs instead of regularizing them.
BlrPosterior fit_blr_design(const MatrixXd& design, const VectorXd& y,
                            double sigma,
                            double condition_limit = kDefaultConditionLimit);

/// Fit on a dataset through a basis function.  Requires N >= p and a full
/// row rank design.
BlrPosterior fit_blr(const BasisFunction& basis, const Dataset& data,
                     double sigma,
                     double condition_limit = kDefaultConditionLimit);

/// Epistemic predictive at a feature vector g = G(x*):
/// mean = g^T gamma_hat, std = sigma * sqrt(g^T V g).
UqPrediction predict_from_features(const BlrPosterior& post, const VectorXd& g);

UqPrediction predict_blr(const BlrPosterior& post, const BasisFunction& basis,
                         const VectorXd& x_star);

/// Posterior predictive for a new observation: epistemic variance + sigma^2.
UqPrediction posterior_predictive_blr(const BlrPosterior& post,
                                      const BasisFunction& basis,
                                      const VectorXd& x_star);

/// Draws n functions gamma ~ N(gamma_hat, sigma^2 V) and evaluates
/// G(x)^T gamma on xs.  Result[i] has one entry per x.
std::vector<VectorXd> sample_blr_function(const BlrPosterior& post,
                                          const BasisFunction& basis,
                                          const std::vector<VectorXd>& xs,
                                          int n, std::uint64_t seed);

}  // namespace uqbench
