#include "uqbench/anchor.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <string>

#include "uqbench/errors.hpp"
#include "uqbench/rng.hpp"

namespace uqbench {

BlrPosterior fit_blr_design(const MatrixXd& design, const VectorXd& y,
                            double sigma, double condition_limit) {
  const Eigen::Index p = design.rows();
  const Eigen::Index n = design.cols();
  if (y.size() != n) {
    throw InvalidArgument("blr fit: design has " + std::to_string(n) +
                          " columns but y has " + std::to_string(y.size()) +
                          " entries");
  }
  if (!(sigma > 0.0)) {
    throw InvalidArgument("blr fit: sigma must be positive");
  }
  if (n < p) {
    throw InsufficientData("blr fit: " + std::to_string(n) +
                           " observations for " + std::to_string(p) +
                           " parameters");
  }

  MatrixXd normal = design * design.transpose();
  normal = 0.5 * (normal + normal.transpose());

  // Condition estimate gates a hard error; silent regularization would break
  // the exact probability matching of the posterior.
  Eigen::SelfAdjointEigenSolver<MatrixXd> eigs(normal);
  const double lambda_min = eigs.eigenvalues().minCoeff();
  const double lambda_max = eigs.eigenvalues().maxCoeff();
  const double condition =
      lambda_min > 0.0 ? lambda_max / lambda_min
                       : std::numeric_limits<double>::infinity();
  if (!(lambda_min > 0.0) || condition > condition_limit) {
    throw SingularDesign("blr fit: normal matrix condition estimate " +
                             std::to_string(condition) + " exceeds limit",
                         condition);
  }

  Eigen::LLT<MatrixXd> llt(normal);
  if (llt.info() != Eigen::Success) {
    throw SingularDesign("blr fit: Cholesky factorization failed", condition);
  }

  BlrPosterior post;
  post.sigma = sigma;
  post.gamma_hat = llt.solve(design * y);
  MatrixXd v = llt.solve(MatrixXd::Identity(p, p));
  post.V = 0.5 * (v + v.transpose());
  return post;
}

BlrPosterior fit_blr(const BasisFunction& basis, const Dataset& data,
                     double sigma, double condition_limit) {
  const VectorXd y =
      Eigen::Map<const VectorXd>(data.targets.data(), data.targets.size());
  return fit_blr_design(basis.design_matrix(data.inputs), y, sigma,
                        condition_limit);
}

UqPrediction predict_from_features(const BlrPosterior& post,
                                   const VectorXd& g) {
  if (g.size() != post.gamma_hat.size()) {
    throw InvalidArgument("blr predict: feature vector has dimension " +
                          std::to_string(g.size()) + ", posterior has " +
                          std::to_string(post.gamma_hat.size()));
  }
  const double quad = std::max(0.0, g.dot(post.V * g));
  return UqPrediction{g.dot(post.gamma_hat), post.sigma * std::sqrt(quad)};
}

UqPrediction predict_blr(const BlrPosterior& post, const BasisFunction& basis,
                         const VectorXd& x_star) {
  return predict_from_features(post, basis.evaluate(x_star));
}

UqPrediction posterior_predictive_blr(const BlrPosterior& post,
                                      const BasisFunction& basis,
                                      const VectorXd& x_star) {
  const UqPrediction epistemic = predict_blr(post, basis, x_star);
  const double var = epistemic.std * epistemic.std + post.sigma * post.sigma;
  return UqPrediction{epistemic.mean, std::sqrt(var)};
}

std::vector<VectorXd> sample_blr_function(const BlrPosterior& post,
                                          const BasisFunction& basis,
                                          const std::vector<VectorXd>& xs,
                                          int n, std::uint64_t seed) {
  if (n < 1) throw InvalidArgument("sample_blr_function: n must be >= 1");
  Eigen::LLT<MatrixXd> llt(post.V);
  if (llt.info() != Eigen::Success) {
    throw SingularDesign("sample_blr_function: V is not positive definite",
                         std::numeric_limits<double>::infinity());
  }
  const MatrixXd root = llt.matrixL();
  const MatrixXd design = basis.design_matrix(xs);

  Rng rng(seed);
  std::vector<VectorXd> curves;
  curves.reserve(n);
  VectorXd z(post.dim());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < z.size(); ++j) z[j] = rng.normal();
    const VectorXd gamma = post.gamma_hat + post.sigma * (root * z);
    curves.push_back(design.transpose() * gamma);
  }
  return curves;
}

}  // namespace uqbench
