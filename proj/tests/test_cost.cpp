#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "bfopt/cost.hpp"
#include "bfopt/dynamics.hpp"
#include "bfopt/errors.hpp"

using namespace bfopt;
using cost::CostSpec;
using dynamics::Trajectory;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

Trajectory make_traj(const std::vector<double>& states, const std::vector<double>& inputs,
                     double dt) {
  Trajectory traj;
  const long n = static_cast<long>(inputs.size());
  traj.times.resize(n + 1);
  for (long t = 0; t <= n; ++t) traj.times[t] = t * dt;
  traj.states.resize(n + 1, 1);
  for (long t = 0; t <= n; ++t) traj.states(t, 0) = states[t];
  traj.inputs.resize(n, 1);
  for (long t = 0; t < n; ++t) traj.inputs(t, 0) = inputs[t];
  return traj;
}

CostSpec quadratic_cost() {
  CostSpec spec;
  spec.stage = [](const VectorXd& x, const VectorXd& u, double) {
    return x.squaredNorm() + u.squaredNorm();
  };
  return spec;
}

}  // namespace

TEST_CASE("unit stage rate integrates to the horizon length") {
  CostSpec spec;
  spec.stage = [](const VectorXd&, const VectorXd&, double) { return 1.0; };
  for (int n : {1, 4, 10, 100}) {
    std::vector<double> xs(n + 1, 0.5), us(n, 0.0);
    const Trajectory traj = make_traj(xs, us, 1.0 / n);
    CHECK(cost::trajectory_cost(spec, traj) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("single-step quadratic cost charges the post-step state") {
  const Trajectory traj = make_traj({2.0, 3.0}, {0.0}, 0.5);
  CHECK(cost::trajectory_cost(quadratic_cost(), traj) == doctest::Approx(0.5 * 9.0));
}

TEST_CASE("terminal cost is added at the final state") {
  CostSpec spec = quadratic_cost();
  spec.stage = [](const VectorXd&, const VectorXd&, double) { return 0.0; };
  spec.terminal = [](const VectorXd& x) { return 10.0 * x[0]; };
  const Trajectory traj = make_traj({1.0, 2.0, 4.0}, {0.0, 0.0}, 0.5);
  CHECK(cost::trajectory_cost(spec, traj) == doctest::Approx(40.0));
}

TEST_CASE("augmented cost by direct substitution") {
  CostSpec spec;
  spec.stage = [](const VectorXd&, const VectorXd&, double) { return 0.0; };
  spec.target = VectorXd::Zero(1);
  spec.rho = 4.0;
  const Trajectory traj = make_traj({0.0, 1.0}, {0.0}, 1.0);
  VectorXd mu(1);
  mu << 2.0;
  // mu * r + rho/2 * r^2 with r = 1
  CHECK(cost::augmented_cost(spec, mu, traj) == doctest::Approx(4.0));
}

TEST_CASE("augmented cost equals the plain cost at zero residual") {
  CostSpec spec = quadratic_cost();
  VectorXd target(1);
  target << 3.0;
  spec.target = target;
  spec.rho = 7.0;
  const Trajectory traj = make_traj({1.0, 3.0}, {0.5}, 0.25);
  VectorXd mu(1);
  mu << -11.0;
  CHECK(cost::augmented_cost(spec, mu, traj) ==
        doctest::Approx(cost::trajectory_cost(spec, traj)));
}

TEST_CASE("zero multiplier and penalty reduce to the plain cost") {
  CostSpec spec = quadratic_cost();
  spec.target = VectorXd::Zero(1);
  spec.rho = 0.0;
  const Trajectory traj = make_traj({1.0, 2.0, -1.0}, {0.3, -0.7}, 0.5);
  CHECK(cost::augmented_cost(spec, VectorXd::Zero(1), traj) ==
        doctest::Approx(cost::trajectory_cost(spec, traj)));
}

TEST_CASE("terminal residual") {
  CostSpec spec = quadratic_cost();
  VectorXd target(1);
  target << 4.0;
  spec.target = target;
  const Trajectory hit = make_traj({2.0, 4.0}, {0.0}, 1.0);
  CHECK(cost::terminal_residual(spec, hit)[0] == doctest::Approx(0.0));
  const Trajectory miss = make_traj({2.0, 3.25}, {0.0}, 1.0);
  CHECK(cost::terminal_residual(spec, miss)[0] == doctest::Approx(-0.75));
  spec.target.reset();
  CHECK_THROWS_AS(cost::terminal_residual(spec, hit), SpecError);
  CHECK_THROWS_AS(cost::augmented_cost(spec, VectorXd::Zero(1), hit), SpecError);
}

TEST_CASE("augmented cost is quadratic in the residual with curvature rho") {
  CostSpec spec;
  spec.stage = [](const VectorXd&, const VectorXd&, double) { return 0.0; };
  spec.target = VectorXd::Zero(1);
  spec.rho = 3.5;
  VectorXd mu(1);
  mu << 1.2;
  const double h = 1e-4;
  const auto value = [&](double xn) {
    const Trajectory traj = make_traj({0.0, xn}, {0.0}, 1.0);
    return cost::augmented_cost(spec, mu, traj);
  };
  const double second = (value(0.7 + h) - 2.0 * value(0.7) + value(0.7 - h)) / (h * h);
  CHECK(second == doctest::Approx(spec.rho).epsilon(1e-8));
  // and affine in mu
  VectorXd mu2 = mu * 2.0;
  const Trajectory traj = make_traj({0.0, 0.7}, {0.0}, 1.0);
  const double j1 = cost::augmented_cost(spec, mu, traj);
  const double j2 = cost::augmented_cost(spec, mu2, traj);
  const double j3 = cost::augmented_cost(spec, mu * 3.0, traj);
  CHECK(j3 - j2 == doctest::Approx(j2 - j1).epsilon(1e-12));
}

TEST_CASE("riemann sum refines monotonically for a smooth integrand") {
  // Fixed continuous control u(t) = sin(t) on xdot = -x + u from x0 = 1.
  const auto run = [](double dt) {
    const long n = std::lround(1.0 / dt);
    Trajectory traj;
    traj.times.resize(n + 1);
    traj.states.resize(n + 1, 1);
    traj.inputs.resize(n, 1);
    traj.states(0, 0) = 1.0;
    for (long t = 0; t < n; ++t) {
      traj.times[t] = t * dt;
      traj.inputs(t, 0) = std::sin(t * dt);
      traj.states(t + 1, 0) =
          traj.states(t, 0) + dt * (-traj.states(t, 0) + traj.inputs(t, 0));
    }
    traj.times[n] = 1.0;
    CostSpec spec;
    spec.stage = [](const VectorXd& x, const VectorXd& u, double) {
      return x.squaredNorm() + u.squaredNorm();
    };
    return cost::trajectory_cost(spec, traj);
  };
  const double j4 = run(0.04), j2 = run(0.02), j1 = run(0.01);
  // halving dt moves J monotonically toward the continuous value
  CHECK(((j4 < j2 && j2 < j1) || (j4 > j2 && j2 > j1)));
  CHECK(std::abs(j2 - j1) < std::abs(j4 - j2));
}

TEST_CASE("non-finite stage values surface as diverged costs") {
  CostSpec spec;
  spec.stage = [](const VectorXd& x, const VectorXd&, double) {
    return std::log(x[0]);  // -inf at the second state
  };
  const Trajectory traj = make_traj({1.0, 0.0}, {0.0}, 1.0);
  CHECK_THROWS_AS(cost::trajectory_cost(spec, traj), DivergedError);
}
