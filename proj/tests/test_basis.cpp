#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "uqbench/basis.hpp"
#include "uqbench/errors.hpp"
#include "uqbench/rng.hpp"

using namespace uqbench;

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

VectorXd vec1(double x) {
  VectorXd v(1);
  v[0] = x;
  return v;
}

VectorXd vec2(double a, double b) {
  VectorXd v(2);
  v[0] = a;
  v[1] = b;
  return v;
}

// Independent scalar search for the minimum of 2.5x - 8x^2 + 0.5x^4,
// evaluated term by term.
double styblinski_1d_min_value() {
  auto f = [](double x) { return 2.5 * x - 8.0 * x * x + 0.5 * x * x * x * x; };
  double best_x = 0.0, best = f(0.0);
  double lo = -5.0, hi = 5.0;
  for (int pass = 0; pass < 8; ++pass) {
    const double step = (hi - lo) / 4000.0;
    for (double x = lo; x <= hi; x += step) {
      if (f(x) < best) {
        best = f(x);
        best_x = x;
      }
    }
    lo = best_x - 10.0 * step;
    hi = best_x + 10.0 * step;
  }
  return best;
}
}  // namespace

TEST_CASE("sinusoidal basis frequencies and phases") {
  const BasisFunction b = make_sinusoidal_basis(1.0);
  CHECK(b.kind() == BasisKind::Sinusoidal);
  CHECK(b.input_dim() == 1);
  CHECK(b.output_dim() == 4);
  CHECK(b.frequencies()[0] == doctest::Approx(0.9).epsilon(1e-14));
  CHECK(b.frequencies()[1] == doctest::Approx(0.9 + 0.2 / 3.0).epsilon(1e-14));
  CHECK(b.frequencies()[2] == doctest::Approx(0.9 + 0.4 / 3.0).epsilon(1e-14));
  CHECK(b.frequencies()[3] == doctest::Approx(1.1).epsilon(1e-14));
  // equal spacing
  const auto& f = b.frequencies();
  CHECK(f[1] - f[0] == doctest::Approx(f[2] - f[1]).epsilon(1e-12));
  CHECK(f[2] - f[1] == doctest::Approx(f[3] - f[2]).epsilon(1e-12));
  CHECK(f[0] < f[1]);
  CHECK(f[1] < f[2]);
  CHECK(f[2] < f[3]);

  const auto& rho = b.phases();
  CHECK(rho[0] == 0.0);
  CHECK(rho[1] == doctest::Approx(kTwoPi / 3.0).epsilon(1e-14));
  CHECK(rho[2] == doctest::Approx(2.0 * kTwoPi / 3.0).epsilon(1e-14));
  CHECK(rho[3] == doctest::Approx(kTwoPi).epsilon(1e-14));

  CHECK_THROWS_AS(make_sinusoidal_basis(0.0), InvalidArgument);
  CHECK_THROWS_AS(make_sinusoidal_basis(-2.0), InvalidArgument);
}

TEST_CASE("sinusoidal basis at x = 0 reduces to the phases") {
  for (double f_main : {1.0, 2.0, 7.5}) {
    const BasisFunction b = make_sinusoidal_basis(f_main);
    const VectorXd g = evaluate_basis(b, vec1(0.0));
    for (int j = 0; j < 4; ++j) {
      CHECK(g[j] == doctest::Approx(std::sin(b.phases()[j])).epsilon(1e-14));
    }
  }
}

TEST_CASE("sinusoidal components match a scalar sine oracle") {
  const BasisFunction b = make_sinusoidal_basis(2.0);
  const VectorXd g = evaluate_basis(b, vec1(0.25));
  for (int j = 0; j < 4; ++j) {
    const double expected =
        std::sin(kTwoPi * b.frequencies()[j] * 0.25 + b.phases()[j]);
    CHECK(g[j] == doctest::Approx(expected).epsilon(1e-14));
  }
}

TEST_CASE("styblinski basis monomials") {
  const BasisFunction b2 = make_styblinski_basis(2);
  CHECK(b2.output_dim() == 6);
  CHECK(evaluate_basis(b2, vec2(0.0, 0.0)).isZero(0.0));

  const BasisFunction b1 = make_styblinski_basis(1);
  const VectorXd g = evaluate_basis(b1, vec1(2.0));
  CHECK(g[0] == 2.0);
  CHECK(g[1] == 4.0);
  CHECK(g[2] == 16.0);

  const BasisFunction b3 = make_styblinski_basis(3);
  Rng rng(7);
  VectorXd x(3);
  for (int j = 0; j < 3; ++j) x[j] = rng.uniform(-4.0, 4.0);
  const VectorXd g3 = evaluate_basis(b3, x);
  for (int j = 0; j < 3; ++j) {
    CHECK(g3[3 * j] == doctest::Approx(std::pow(x[j], 1)).epsilon(1e-12));
    CHECK(g3[3 * j + 1] == doctest::Approx(std::pow(x[j], 2)).epsilon(1e-12));
    CHECK(g3[3 * j + 2] == doctest::Approx(std::pow(x[j], 4)).epsilon(1e-12));
  }

  CHECK_THROWS_AS(make_styblinski_basis(0), InvalidArgument);
}

TEST_CASE("polynomial basis monomials") {
  const BasisFunction b = make_polynomial_basis();
  CHECK(b.input_dim() == 2);
  CHECK(b.output_dim() == 6);

  const VectorXd zero = evaluate_basis(b, vec2(0.0, 0.0));
  CHECK(zero[0] == 1.0);
  for (int j = 1; j < 6; ++j) CHECK(zero[j] == 0.0);

  const VectorXd ones = evaluate_basis(b, vec2(1.0, 1.0));
  for (int j = 0; j < 6; ++j) CHECK(ones[j] == 1.0);

  const VectorXd g = evaluate_basis(b, vec2(2.0, 3.0));
  CHECK(g[0] == 1.0);
  CHECK(g[1] == 2.0);
  CHECK(g[2] == 3.0);
  CHECK(g[3] == 6.0);
  CHECK(g[4] == 4.0);
  CHECK(g[5] == 9.0);
}

TEST_CASE("evaluate rejects dimension mismatches") {
  const BasisFunction b = make_polynomial_basis();
  CHECK_THROWS_AS(evaluate_basis(b, vec1(1.0)), InvalidArgument);
  CHECK_THROWS_AS(evaluate_basis(make_styblinski_basis(2), vec1(1.0)),
                  InvalidArgument);
}

TEST_CASE("ground truth values") {
  const BasisFunction b = make_styblinski_basis(1);
  VectorXd gamma(3);
  gamma << 2.5, -8.0, 0.5;
  CHECK(ground_truth(b, gamma, vec1(0.0)) == 0.0);

  const double oracle_min = styblinski_1d_min_value();
  const double at_minimizer = ground_truth(b, gamma, vec1(-2.903534));
  CHECK(std::abs(at_minimizer - oracle_min) < 1e-3);
  CHECK(std::abs(at_minimizer - (-39.166)) < 1e-3);

  const BasisFunction poly = make_polynomial_basis();
  CHECK(ground_truth(poly, VectorXd::Ones(6), vec2(2.0, 3.0)) == 25.0);

  CHECK_THROWS_AS(ground_truth(poly, VectorXd::Ones(5), vec2(0.0, 0.0)),
                  InvalidArgument);
}

TEST_CASE("linearity in gamma") {
  Rng rng(42);
  const BasisFunction bases[] = {make_sinusoidal_basis(2.0),
                                 make_styblinski_basis(2),
                                 make_polynomial_basis()};
  for (const BasisFunction& b : bases) {
    for (int trial = 0; trial < 50; ++trial) {
      VectorXd x(b.input_dim());
      for (int j = 0; j < b.input_dim(); ++j) x[j] = rng.uniform(-5.0, 5.0);
      VectorXd g1(b.output_dim()), g2(b.output_dim());
      for (int j = 0; j < b.output_dim(); ++j) {
        g1[j] = rng.uniform(-2.0, 2.0);
        g2[j] = rng.uniform(-2.0, 2.0);
      }
      const double a = rng.uniform(-3.0, 3.0);
      const double combined = ground_truth(b, a * g1 + g2, x);
      const double split =
          a * ground_truth(b, g1, x) + ground_truth(b, g2, x);
      const double scale = std::max({1.0, std::abs(combined), std::abs(split)});
      CHECK(std::abs(combined - split) <= 1e-12 * scale);
    }
  }
}

TEST_CASE("evaluation is pure and bit-stable") {
  const BasisFunction b = make_sinusoidal_basis(3.0);
  const VectorXd x = vec1(1.2345);
  const VectorXd first = evaluate_basis(b, x);
  for (int i = 0; i < 5; ++i) {
    const VectorXd again = evaluate_basis(b, x);
    for (int j = 0; j < 4; ++j) CHECK(first[j] == again[j]);
  }
}

TEST_CASE("styblinski ground truth equals the per-coordinate oracle") {
  const int d = 3;
  const BasisFunction b = make_styblinski_basis(d);
  VectorXd gamma(3 * d);
  for (int j = 0; j < d; ++j) {
    gamma[3 * j] = 2.5;
    gamma[3 * j + 1] = -8.0;
    gamma[3 * j + 2] = 0.5;
  }
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    VectorXd x(d);
    for (int j = 0; j < d; ++j) x[j] = rng.uniform(-5.0, 5.0);
    double oracle = 0.0;
    for (int j = 0; j < d; ++j) {
      oracle += 0.5 * std::pow(x[j], 4) - 8.0 * x[j] * x[j] + 2.5 * x[j];
    }
    const double value = ground_truth(b, gamma, x);
    const double scale = std::max(1.0, std::abs(oracle));
    CHECK(std::abs(value - oracle) <= 1e-12 * scale);
  }
}
