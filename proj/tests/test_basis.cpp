#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "bfopt/basis.hpp"
#include "bfopt/errors.hpp"
#include "bfopt/rng.hpp"

using bfopt::basis::BasisKind;
using bfopt::basis::BasisSet;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST_CASE("chebyshev values at the domain midpoint") {
  const BasisSet b{BasisKind::Chebyshev, 4, 1.0};
  const VectorXd phi = bfopt::basis::eval_basis(b, 0.5);  // s = 0
  CHECK(phi[0] == doctest::Approx(1.0));
  CHECK(phi[1] == doctest::Approx(0.0));
  CHECK(phi[2] == doctest::Approx(-1.0));
  CHECK(phi[3] == doctest::Approx(0.0));
}

TEST_CASE("legendre values at the domain midpoint") {
  const BasisSet b{BasisKind::Legendre, 3, 2.0};
  const VectorXd phi = bfopt::basis::eval_basis(b, 1.0);
  CHECK(phi[0] == doctest::Approx(1.0));
  CHECK(phi[1] == doctest::Approx(0.0));
  CHECK(phi[2] == doctest::Approx(-0.5));
}

TEST_CASE("fourier values at t = 0") {
  const BasisSet b{BasisKind::Fourier, 5, 2.0};
  const VectorXd phi = bfopt::basis::eval_basis(b, 0.0);
  CHECK(phi[0] == 1.0);
  CHECK(phi[1] == 0.0);
  CHECK(phi[2] == 1.0);
  CHECK(phi[3] == 0.0);
  CHECK(phi[4] == 1.0);
}

TEST_CASE("evaluation outside the horizon is rejected") {
  const BasisSet b{BasisKind::Chebyshev, 3, 1.0};
  CHECK_THROWS_AS(bfopt::basis::eval_basis(b, -0.1), bfopt::DomainError);
  CHECK_THROWS_AS(bfopt::basis::eval_basis(b, 1.1), bfopt::DomainError);
  CHECK_NOTHROW(bfopt::basis::eval_basis(b, 1.0));
}

TEST_CASE("basis matrix rows match pointwise evaluation") {
  VectorXd grid(2);
  grid << 0.0, 1.0;
  const BasisSet cheb{BasisKind::Chebyshev, 2, 1.0};
  const MatrixXd rows = bfopt::basis::basis_matrix(cheb, grid);
  CHECK(rows(0, 0) == doctest::Approx(1.0));
  CHECK(rows(0, 1) == doctest::Approx(-1.0));
  CHECK(rows(1, 0) == doctest::Approx(1.0));
  CHECK(rows(1, 1) == doctest::Approx(1.0));

  const BasisSet fourier{BasisKind::Fourier, 1, 1.0};
  VectorXd grid5 = VectorXd::LinSpaced(5, 0.0, 1.0);
  const MatrixXd ones = bfopt::basis::basis_matrix(fourier, grid5);
  CHECK((ones.col(0).array() == 1.0).all());
}

TEST_CASE("legendre matrix matches the explicit polynomial formulas") {
  const int n = 200;
  const BasisSet b{BasisKind::Legendre, 4, 3.0};
  VectorXd grid = VectorXd::LinSpaced(n, 0.0, 3.0);
  const MatrixXd rows = bfopt::basis::basis_matrix(b, grid);
  for (int j = 0; j < n; ++j) {
    const double s = 2.0 * grid[j] / 3.0 - 1.0;
    CHECK(rows(j, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rows(j, 1) == doctest::Approx(s).epsilon(1e-12));
    CHECK(std::abs(rows(j, 2) - (3 * s * s - 1) / 2.0) < 1e-12);
    CHECK(std::abs(rows(j, 3) - (5 * s * s * s - 3 * s) / 2.0) < 1e-12);
  }
}

TEST_CASE("recurrences match closed forms at random points") {
  bfopt::SplitMix64 gen(2024);
  const BasisSet cheb{BasisKind::Chebyshev, 4, 1.0};
  const BasisSet leg{BasisKind::Legendre, 4, 1.0};
  for (int i = 0; i < 1000; ++i) {
    const double t = gen.next_double();
    const double s = 2.0 * t - 1.0;
    const VectorXd tk = bfopt::basis::eval_basis(cheb, t);
    CHECK(std::abs(tk[2] - (2 * s * s - 1)) < 1e-12);
    CHECK(std::abs(tk[3] - (4 * s * s * s - 3 * s)) < 1e-12);
    const VectorXd pk = bfopt::basis::eval_basis(leg, t);
    CHECK(std::abs(pk[2] - (3 * s * s - 1) / 2.0) < 1e-12);
    CHECK(std::abs(pk[3] - (5 * s * s * s - 3 * s) / 2.0) < 1e-12);
  }
}

TEST_CASE("chebyshev boundedness on the mapped domain") {
  bfopt::SplitMix64 gen(7);
  const BasisSet b{BasisKind::Chebyshev, 12, 2.0};
  for (int i = 0; i < 1000; ++i) {
    const double t = 2.0 * gen.next_double();
    const VectorXd phi = bfopt::basis::eval_basis(b, t);
    CHECK(phi.lpNorm<Eigen::Infinity>() <= 1.0 + 1e-12);
  }
}

TEST_CASE("fourier gram matrix is diagonally dominant") {
  const int n = 1000;
  const BasisSet b{BasisKind::Fourier, 9, 2.0};
  VectorXd grid(n);
  for (int j = 0; j < n; ++j) grid[j] = 2.0 * j / n;
  const MatrixXd rows = bfopt::basis::basis_matrix(b, grid);
  // Constant column excluded: the claim is about the oscillating pairs.
  const MatrixXd gram = rows.rightCols(8).transpose() * rows.rightCols(8);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j)
      if (i != j) CHECK(std::abs(gram(i, j)) < 1e-2 * gram(i, i));
}

TEST_CASE("control signal examples") {
  MatrixXd theta(2, 1);
  theta << 2.0, 0.0;
  MatrixXd row(1, 2);
  row << 1.0, 0.3;
  CHECK(bfopt::basis::control_signal(theta, row)(0, 0) == doctest::Approx(2.0));

  MatrixXd ones(2, 1);
  ones << 1.0, 1.0;
  MatrixXd cheb_row(1, 2);
  cheb_row << 1.0, 0.5;  // Chebyshev row at s = 0.5, m = 2
  CHECK(bfopt::basis::control_signal(ones, cheb_row)(0, 0) == doctest::Approx(1.5));

  CHECK_THROWS_AS(bfopt::basis::control_signal(theta, MatrixXd::Ones(1, 3)),
                  bfopt::SpecError);
}

TEST_CASE("control signal equals the direct summation oracle") {
  bfopt::SplitMix64 gen(99);
  const BasisSet b{BasisKind::Chebyshev, 4, 1.0};
  MatrixXd theta(4, 1);
  for (int i = 0; i < 4; ++i) theta(i, 0) = gen.next_symmetric(2.0);
  VectorXd grid = VectorXd::LinSpaced(100, 0.0, 1.0);
  const MatrixXd rows = bfopt::basis::basis_matrix(b, grid);
  const MatrixXd u = bfopt::basis::control_signal(theta, rows);
  for (int j = 0; j < 100; ++j) {
    double direct = 0.0;
    const VectorXd phi = bfopt::basis::eval_basis(b, grid[j]);
    for (int i = 0; i < 4; ++i) direct += theta(i, 0) * phi[i];
    CHECK(u(j, 0) == doctest::Approx(direct).epsilon(1e-14));
  }
}

TEST_CASE("control signal is linear in theta") {
  bfopt::SplitMix64 gen(123);
  const BasisSet b{BasisKind::Fourier, 7, 2.0};
  VectorXd grid = VectorXd::LinSpaced(50, 0.0, 2.0);
  const MatrixXd rows = bfopt::basis::basis_matrix(b, grid);
  for (int trial = 0; trial < 1000; ++trial) {
    MatrixXd t1(7, 2), t2(7, 2);
    for (int i = 0; i < 7; ++i)
      for (int j = 0; j < 2; ++j) {
        t1(i, j) = gen.next_symmetric(3.0);
        t2(i, j) = gen.next_symmetric(3.0);
      }
    const double a = gen.next_symmetric(2.0), c = gen.next_symmetric(2.0);
    const MatrixXd lhs = bfopt::basis::control_signal(a * t1 + c * t2, rows);
    const MatrixXd rhs = a * bfopt::basis::control_signal(t1, rows) +
                         c * bfopt::basis::control_signal(t2, rows);
    CHECK((lhs - rhs).lpNorm<Eigen::Infinity>() <=
          1e-12 * (1.0 + rhs.lpNorm<Eigen::Infinity>()));
  }
}

TEST_CASE("invalid basis configurations are rejected") {
  CHECK_THROWS_AS(bfopt::basis::eval_basis(BasisSet{BasisKind::Chebyshev, 0, 1.0}, 0.0),
                  bfopt::SpecError);
  CHECK_THROWS_AS(bfopt::basis::eval_basis(BasisSet{BasisKind::Chebyshev, 2, -1.0}, 0.0),
                  bfopt::SpecError);
  CHECK_THROWS_AS(bfopt::basis::basis_kind_from_string("spline"), bfopt::SpecError);
}
