#pragma once

#include <Eigen/Core>
#include <array>
#include <vector>

namespace uqbench {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class BasisKind { Sinusoidal, StyblinskiTang, Polynomial2D };

/// A nonlinear feature map G: R^d -> R^p.  The regression function under
/// study is always G(x)^T gamma, linear in gamma.  Instances are immutable
/// and safe to evaluate concurrently.
class BasisFunction {
 public:
  BasisKind kind() const { return kind_; }
  int input_dim() const { return input_dim_; }
  int output_dim() const { return output_dim_; }

  /// Feature vector G(x); length is always output_dim().
  VectorXd evaluate(const VectorXd& x) const;

  /// p x N design matrix with columns G(x_i).
  MatrixXd design_matrix(const std::vector<VectorXd>& xs) const;

  // Sinusoidal parameters; zero-filled for the other kinds.
  double f_main() const { return f_main_; }
  const std::array<double, 4>& frequencies() const { return frequencies_; }
  const std::array<double, 4>& phases() const { return phases_; }

 private:
  friend BasisFunction make_sinusoidal_basis(double f_main);
  friend BasisFunction make_styblinski_basis(int d);
  friend BasisFunction make_polynomial_basis();
  BasisFunction() = default;

  BasisKind kind_ = BasisKind::Polynomial2D;
  int input_dim_ = 0;
  int output_dim_ = 0;
  double f_main_ = 0.0;
  std::array<double, 4> frequencies_{};
  std::array<double, 4> phases_{};
};

/// Four sinusoids sin(2*pi*f_j*x + rho_j) with frequencies equally spaced
/// over [0.9, 1.1]*f_main and phases equally spaced over [0, 2*pi], both
/// with inclusive endpoints.  d = 1, p = 4.
BasisFunction make_sinusoidal_basis(double f_main);

/// Per-coordinate monomials (x_j, x_j^2, x_j^4) for j = 1..d.  p = 3d.
BasisFunction make_styblinski_basis(int d);

/// (1, x1, x2, x1*x2, x1^2, x2^2).  d = 2, p = 6.
BasisFunction make_polynomial_basis();

/// G(x); checks dim(x) == b.input_dim().
VectorXd evaluate_basis(const BasisFunction& b, const VectorXd& x);

/// G(x)^T gamma, the unnoisy regression value.
double ground_truth(const BasisFunction& b, const VectorXd& gamma,
                    const VectorXd& x);

}  // namespace uqbench
