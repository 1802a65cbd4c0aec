#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "bfopt/errors.hpp"
#include "bfopt/estimator.hpp"
#include "bfopt/rng.hpp"

using namespace bfopt;
using estimator::EstimatorKind;
using estimator::PerturbationScheme;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

PerturbationScheme central(double eps) {
  return {EstimatorKind::CoordinateCentral, eps, 0, 1};
}

PerturbationScheme randomized(double eps, int samples, std::uint64_t seed) {
  return {EstimatorKind::RandomizedLeastSquares, eps, samples, seed};
}

}  // namespace

TEST_CASE("central difference is exact on quadratics") {
  VectorXd theta(1);
  theta << 1.0;
  const auto j = [](const VectorXd& v) { return v[0] * v[0]; };
  const VectorXd g = estimator::estimate_gradient(j, theta, central(0.1));
  CHECK(g[0] == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("central difference on a cubic carries the eps^2 term") {
  VectorXd theta(1);
  theta << 1.0;
  const auto j = [](const VectorXd& v) { return v[0] * v[0] * v[0]; };
  const VectorXd g = estimator::estimate_gradient(j, theta, central(0.1));
  CHECK(g[0] == doctest::Approx(3.01).epsilon(1e-12));  // (1.331 - 0.729) / 0.2
}

TEST_CASE("epsilon halving shrinks the central-difference error by about four") {
  VectorXd theta(2);
  theta << 0.7, -0.4;
  const auto j = [](const VectorXd& v) {
    return v[0] * v[0] * v[0] + 2.0 * v[1] * v[1] * v[1] + v[0] * v[1];
  };
  VectorXd exact(2);
  exact << 3.0 * 0.7 * 0.7 + (-0.4), 6.0 * 0.4 * 0.4 + 0.7;
  const double e1 =
      (estimator::estimate_gradient(j, theta, central(0.1)) - exact).norm();
  const double e2 =
      (estimator::estimate_gradient(j, theta, central(0.05)) - exact).norm();
  CHECK(e1 / e2 >= 3.0);
  CHECK(e1 / e2 <= 5.0);
}

TEST_CASE("randomized least squares recovers a simple gradient") {
  VectorXd theta(2);
  theta << 1.0, 1.0;
  const auto j = [](const VectorXd& v) { return v.squaredNorm(); };
  const VectorXd g = estimator::estimate_gradient(j, theta, randomized(0.01, 8, 3));
  CHECK(std::abs(g[0] - 2.0) < 0.03);
  CHECK(std::abs(g[1] - 2.0) < 0.03);
}

TEST_CASE("randomized estimate bias on random quadratics is within eps * |H|") {
  SplitMix64 gen(404);
  for (int trial = 0; trial < 50; ++trial) {
    const int p = 2 + static_cast<int>(gen.next() % 9);  // p <= 10
    MatrixXd h = MatrixXd::Zero(p, p);
    for (int i = 0; i < p; ++i)
      for (int j = 0; j <= i; ++j) {
        h(i, j) = gen.next_symmetric(1.0);
        h(j, i) = h(i, j);
      }
    VectorXd lin(p), theta(p);
    for (int i = 0; i < p; ++i) {
      lin[i] = gen.next_symmetric(1.0);
      theta[i] = gen.next_symmetric(1.0);
    }
    const auto j = [&](const VectorXd& v) { return 0.5 * v.dot(h * v) + lin.dot(v); };
    const VectorXd exact = h * theta + lin;
    const double eps = 1e-3;
    const VectorXd g = estimator::estimate_gradient(
        j, theta, randomized(eps, 2 * p, 1000 + trial), trial);
    const double hnorm = h.operatorNorm();
    CHECK((g - exact).lpNorm<Eigen::Infinity>() <= eps * hnorm + 1e-9);
  }
}

TEST_CASE("fixed seeds give identical estimates") {
  VectorXd theta(3);
  theta << 0.2, -0.1, 0.5;
  const auto j = [](const VectorXd& v) { return std::sin(v[0]) + v[1] * v[2]; };
  const VectorXd a = estimator::estimate_gradient(j, theta, randomized(0.01, 6, 9), 17);
  const VectorXd b = estimator::estimate_gradient(j, theta, randomized(0.01, 6, 9), 17);
  CHECK(a == b);
  // a different iteration draws different directions
  const VectorXd c = estimator::estimate_gradient(j, theta, randomized(0.01, 6, 9), 18);
  CHECK(a != c);
}

TEST_CASE("non-finite base point is rejected") {
  VectorXd theta(1);
  theta << 0.0;
  const auto j = [](const VectorXd&) { return std::numeric_limits<double>::infinity(); };
  CHECK_THROWS_AS(
      estimator::estimate_gradient(j, theta, randomized(0.1, 4, 1)), BasePointError);
  CHECK_THROWS_AS(estimator::estimate_gradient([](const VectorXd& v) { return v[0]; },
                                               theta, central(0.1), 0,
                                               std::numeric_limits<double>::quiet_NaN()),
                  BasePointError);
}

TEST_CASE("diverged samples are dropped, full divergence errors out") {
  VectorXd theta(2);
  theta.setZero();
  int calls = 0;
  // Finite at the base, infinite at every perturbed point.
  const auto j = [&calls](const VectorXd& v) {
    ++calls;
    if (v.isZero(0.0)) return 0.0;
    return std::numeric_limits<double>::infinity();
  };
  CHECK_THROWS_AS(estimator::estimate_gradient(j, theta, randomized(0.1, 4, 5), 0, 0.0),
                  EstimationError);
  CHECK(calls == 8);  // 4 samples, resampled once
}

TEST_CASE("sample budget below the parameter count is rejected") {
  VectorXd theta(4);
  theta.setZero();
  const auto j = [](const VectorXd& v) { return v.squaredNorm(); };
  CHECK_THROWS_AS(estimator::estimate_gradient(j, theta, randomized(0.1, 3, 5)),
                  SpecError);
}

TEST_CASE("flatten and unflatten round trip") {
  MatrixXd theta(2, 1);
  theta << 1.5, -2.5;
  const VectorXd flat = estimator::flatten(theta);
  CHECK(flat.size() == 2);
  CHECK(flat[0] == 1.5);
  CHECK(flat[1] == -2.5);
  CHECK(estimator::unflatten(flat, 2, 1) == theta);

  VectorXd mu(1);
  mu << 7.0;
  const VectorXd joint = estimator::flatten(theta, mu);
  CHECK(joint.size() == 3);
  CHECK(joint[2] == 7.0);

  MatrixXd wide(3, 2);
  wide << 1, 4, 2, 5, 3, 6;
  const VectorXd col_major = estimator::flatten(wide);
  for (int i = 0; i < 6; ++i) CHECK(col_major[i] == i + 1);  // column-major layout
  CHECK(estimator::unflatten(col_major, 3, 2) == wide);
  CHECK_THROWS_AS(estimator::unflatten(col_major, 2, 2), SpecError);
}

TEST_CASE("scheme validation") {
  VectorXd theta(1);
  theta << 1.0;
  const auto j = [](const VectorXd& v) { return v[0]; };
  CHECK_THROWS_AS(estimator::estimate_gradient(j, theta, randomized(0.0, 4, 1)),
                  SpecError);
  CHECK_THROWS_AS(estimator::estimate_gradient(j, VectorXd(), central(0.1)), SpecError);
}
