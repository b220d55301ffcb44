#include "uqbench/basis.hpp"

#include <cmath>
#include <numbers>

#include "uqbench/errors.hpp"

namespace uqbench {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

BasisFunction make_sinusoidal_basis(double f_main) {
  if (!(f_main > 0.0)) {
    throw InvalidArgument("sinusoidal basis requires f_main > 0");
  }
  BasisFunction b;
  b.kind_ = BasisKind::Sinusoidal;
  b.input_dim_ = 1;
  b.output_dim_ = 4;
  b.f_main_ = f_main;
  // Endpoints inclusive on both grids: frequencies span [0.9, 1.1]*f_main,
  // phases span [0, 2*pi].
  for (int j = 0; j < 4; ++j) {
    b.frequencies_[j] = (0.9 + 0.2 * j / 3.0) * f_main;
    b.phases_[j] = kTwoPi * j / 3.0;
  }
  return b;
}

BasisFunction make_styblinski_basis(int d) {
  if (d < 1) {
    throw InvalidArgument("styblinski basis requires d >= 1");
  }
  BasisFunction b;
  b.kind_ = BasisKind::StyblinskiTang;
  b.input_dim_ = d;
  b.output_dim_ = 3 * d;
  return b;
}

BasisFunction make_polynomial_basis() {
  BasisFunction b;
  b.kind_ = BasisKind::Polynomial2D;
  b.input_dim_ = 2;
  b.output_dim_ = 6;
  return b;
}

VectorXd BasisFunction::evaluate(const VectorXd& x) const {
  if (x.size() != input_dim_) {
    throw InvalidArgument("basis evaluation: input has dimension " +
                          std::to_string(x.size()) + ", expected " +
                          std::to_string(input_dim_));
  }
  VectorXd g(output_dim_);
  switch (kind_) {
    case BasisKind::Sinusoidal:
      for (int j = 0; j < 4; ++j) {
        g[j] = std::sin(kTwoPi * frequencies_[j] * x[0] + phases_[j]);
      }
      break;
    case BasisKind::StyblinskiTang:
      for (int j = 0; j < input_dim_; ++j) {
        const double v = x[j];
        const double v2 = v * v;
        g[3 * j] = v;
        g[3 * j + 1] = v2;
        g[3 * j + 2] = v2 * v2;
      }
      break;
    case BasisKind::Polynomial2D:
      g[0] = 1.0;
      g[1] = x[0];
      g[2] = x[1];
      g[3] = x[0] * x[1];
      g[4] = x[0] * x[0];
      g[5] = x[1] * x[1];
      break;
  }
  return g;
}

MatrixXd BasisFunction::design_matrix(const std::vector<VectorXd>& xs) const {
  MatrixXd design(output_dim_, static_cast<Eigen::Index>(xs.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) {
    design.col(static_cast<Eigen::Index>(i)) = evaluate(xs[i]);
  }
  return design;
}

VectorXd evaluate_basis(const BasisFunction& b, const VectorXd& x) {
  return b.evaluate(x);
}

double ground_truth(const BasisFunction& b, const VectorXd& gamma,
                    const VectorXd& x) {
  if (gamma.size() != b.output_dim()) {
    throw InvalidArgument("ground_truth: gamma has dimension " +
                          std::to_string(gamma.size()) + ", expected " +
                          std::to_string(b.output_dim()));
  }
  return b.evaluate(x).dot(gamma);
}

}  // namespace uqbench
