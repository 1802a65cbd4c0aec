#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "bfopt/dynamics.hpp"
#include "bfopt/errors.hpp"
#include "bfopt/problem.hpp"
#include "bfopt/rng.hpp"

using namespace bfopt;
using dynamics::Trajectory;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

dynamics::SmoothFieldFn scalar_field(double a, double b) {
  return [a, b](const VectorXd& x, const VectorXd& u, double, VectorXd& dx) {
    dx[0] = a * x[0] + b * u[0];
  };
}

}  // namespace

TEST_CASE("two euler steps by hand") {
  VectorXd x0(1);
  x0 << 2.0;
  const Trajectory traj =
      dynamics::rollout_smooth(scalar_field(1.0, 1.0), x0, MatrixXd::Zero(2, 1), 0.5, 2);
  CHECK(traj.states(0, 0) == 2.0);
  CHECK(traj.states(1, 0) == doctest::Approx(3.0));
  CHECK(traj.states(2, 0) == doctest::Approx(4.5));
  CHECK(traj.times[2] == doctest::Approx(1.0));
}

TEST_CASE("zero field keeps the state constant") {
  VectorXd x0(2);
  x0 << 1.5, -3.0;
  auto zero = [](const VectorXd&, const VectorXd&, double, VectorXd& dx) { dx.setZero(); };
  const Trajectory traj = dynamics::rollout_smooth(zero, x0, MatrixXd::Zero(10, 1), 0.1, 10);
  for (int t = 0; t <= 10; ++t) {
    CHECK(traj.states(t, 0) == 1.5);
    CHECK(traj.states(t, 1) == -3.0);
  }
}

TEST_CASE("euler recursion is exact for linear systems") {
  SplitMix64 gen(5150);
  for (int trial = 0; trial < 20; ++trial) {
    MatrixXd a(2, 2), b(2, 1);
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) a(i, j) = gen.next_symmetric(1.0);
      b(i, 0) = gen.next_symmetric(1.0);
    }
    VectorXd x0(2);
    x0 << gen.next_symmetric(2.0), gen.next_symmetric(2.0);
    MatrixXd u(50, 1);
    for (int t = 0; t < 50; ++t) u(t, 0) = gen.next_symmetric(1.0);
    const double dt = 0.02;
    auto field = [&a, &b](const VectorXd& x, const VectorXd& uu, double, VectorXd& dx) {
      dx = a * x + b * uu;
    };
    const Trajectory traj = dynamics::rollout_smooth(field, x0, u, dt, 50);
    VectorXd x = x0;
    const MatrixXd step = MatrixXd::Identity(2, 2) + dt * a;
    for (int t = 0; t < 50; ++t) {
      x = step * x + dt * b * u.row(t).transpose();
      const double scale = std::max(1.0, x.lpNorm<Eigen::Infinity>());
      CHECK((traj.states.row(t + 1).transpose() - x).lpNorm<Eigen::Infinity>() <=
            1e-12 * scale);
    }
  }
}

TEST_CASE("rollouts are bit-for-bit deterministic") {
  VectorXd x0(1);
  x0 << 0.3;
  MatrixXd u = MatrixXd::Constant(100, 1, 0.25);
  auto field = [](const VectorXd& x, const VectorXd& uu, double t, VectorXd& dx) {
    dx[0] = std::sin(x[0]) + uu[0] * std::cos(t);
  };
  const Trajectory a = dynamics::rollout_smooth(field, x0, u, 0.01, 100);
  const Trajectory b = dynamics::rollout_smooth(field, x0, u, 0.01, 100);
  CHECK(a.states == b.states);
  CHECK(a.times == b.times);
}

TEST_CASE("diverging rollout reports the step index") {
  VectorXd x0(1);
  x0 << 10.0;
  auto field = [](const VectorXd& x, const VectorXd&, double, VectorXd& dx) {
    dx[0] = x[0] * x[0];
  };
  CHECK_THROWS_AS(dynamics::rollout_smooth(field, x0, MatrixXd::Zero(100, 1), 1.0, 100),
                  DivergedError);
  try {
    dynamics::rollout_smooth(field, x0, MatrixXd::Zero(100, 1), 1.0, 100);
  } catch (const DivergedError& e) {
    CHECK(e.step() >= 0);
    CHECK(e.step() < 10);
  }
}

TEST_CASE("invalid rollout arguments") {
  VectorXd x0(1);
  x0 << 1.0;
  auto f = scalar_field(0.0, 1.0);
  CHECK_THROWS_AS(dynamics::rollout_smooth(f, x0, MatrixXd::Zero(2, 1), -0.1, 2),
                  SpecError);
  CHECK_THROWS_AS(dynamics::rollout_smooth(f, x0, MatrixXd::Zero(2, 1), 0.1, 0), SpecError);
  CHECK_THROWS_AS(dynamics::rollout_smooth(f, x0, MatrixXd::Zero(3, 1), 0.1, 2), SpecError);
}

TEST_CASE("region classification on the switched benchmark partition") {
  const auto spec = problem::builtin("ex2");
  const dynamics::RegionSpec regions = problem::make_region_spec(spec);
  VectorXd x(2);
  x << -8.0, -6.0;
  CHECK(dynamics::classify_region(regions, x) == 0);  // region 1
  x << 0.0, 0.0;
  CHECK(dynamics::classify_region(regions, x) == 3);  // region 4
  x << -4.0, -3.0;
  CHECK(dynamics::classify_region(regions, x) == 1);  // region 2
}

TEST_CASE("missing catch-all raises a spec error") {
  dynamics::RegionSpec regions;
  regions.regions.push_back(
      {[](const VectorXd& x, double) { return x[0] > 0; }, scalar_field(0, 1)});
  VectorXd x(1);
  x << -1.0;
  CHECK_THROWS_AS(dynamics::classify_region(regions, x), SpecError);
}

TEST_CASE("single-region switched rollout reduces to the smooth rollout") {
  VectorXd x0(1);
  x0 << 0.7;
  MatrixXd u = MatrixXd::Constant(40, 1, -0.2);
  dynamics::RegionSpec regions;
  regions.regions.push_back(
      {[](const VectorXd&, double) { return true; }, scalar_field(0.8, 1.0)});
  const Trajectory sw = dynamics::rollout_switched(regions, x0, u, 0.05, 40);
  const Trajectory sm = dynamics::rollout_smooth(scalar_field(0.8, 1.0), x0, u, 0.05, 40);
  CHECK(sw.states == sm.states);
}

TEST_CASE("switched benchmark first step uses the region-1 field") {
  const auto spec = problem::builtin("ex2");
  const auto problem = problem::make_control_problem(spec);
  Trajectory traj;
  problem.rollout(MatrixXd::Zero(200, 1), traj);
  // A1 (-8,-6) = (-4, 22)
  CHECK(traj.states(1, 0) == doctest::Approx(-8.0 + 0.01 * -4.0));
  CHECK(traj.states(1, 1) == doctest::Approx(-6.0 + 0.01 * 22.0));
}

TEST_CASE("switched state increments are bounded by dt times the field magnitude") {
  const auto spec = problem::builtin("ex2");
  const auto problem = problem::make_control_problem(spec);
  Trajectory traj;
  problem.rollout(MatrixXd::Zero(200, 1), traj);
  double max_field = 0.0;
  for (int t = 0; t <= 200; ++t) {
    const double x1 = traj.states(t, 0), x2 = traj.states(t, 1);
    // Coarse bound over all four linear fields at this state.
    const double mag = 6.0 * (std::abs(x1) + std::abs(x2));
    max_field = std::max(max_field, mag);
  }
  for (int t = 0; t < 200; ++t) {
    const double inc =
        (traj.states.row(t + 1) - traj.states.row(t)).lpNorm<Eigen::Infinity>();
    CHECK(inc <= 0.01 * max_field + 1e-12);
  }
}

TEST_CASE("delayed rollout matches the hand-computed first step") {
  const auto spec = problem::builtin("ex3");
  const auto problem = problem::make_control_problem(spec);
  Trajectory traj;
  problem.rollout(MatrixXd::Zero(200, 1), traj);
  CHECK(traj.states(1, 0) == doctest::Approx(1.02));  // 1 + (1 + 1 + 0) * 0.01
}

TEST_CASE("delay must be positive and grid aligned") {
  VectorXd x0(1);
  x0 << 1.0;
  auto f = [](const VectorXd& x, const VectorXd& xd, const VectorXd& u, double,
              VectorXd& dx) { dx[0] = x[0] + xd[0] + u[0]; };
  dynamics::DelaySpec delay;
  delay.history = [](double, VectorXd& x) { x[0] = 1.0; };
  delay.tau = 0.0;
  CHECK_THROWS_AS(dynamics::rollout_delayed(f, delay, x0, MatrixXd::Zero(10, 1), 0.1, 10),
                  SpecError);
  delay.tau = 0.25;  // not a multiple of dt = 0.1
  CHECK_THROWS_AS(dynamics::rollout_delayed(f, delay, x0, MatrixXd::Zero(10, 1), 0.1, 10),
                  SpecError);
}

TEST_CASE("delayed system that ignores the delayed state reduces to smooth") {
  VectorXd x0(1);
  x0 << 2.0;
  MatrixXd u = MatrixXd::Constant(30, 1, 0.1);
  auto f = [](const VectorXd& x, const VectorXd&, const VectorXd& uu, double,
              VectorXd& dx) { dx[0] = -0.5 * x[0] + uu[0]; };
  dynamics::DelaySpec delay;
  delay.tau = 0.3;
  delay.history = [](double, VectorXd& x) { x[0] = 777.0; };  // must not matter
  const Trajectory delayed = dynamics::rollout_delayed(f, delay, x0, u, 0.1, 30);
  const Trajectory smooth = dynamics::rollout_smooth(scalar_field(-0.5, 1.0), x0, u, 0.1, 30);
  CHECK(delayed.states == smooth.states);
}

TEST_CASE("delayed rollout reads the history at shifted times") {
  VectorXd x0(1);
  x0 << 0.0;
  // dx = xd; history(t) = t, so the first steps integrate the ramp.
  auto f = [](const VectorXd&, const VectorXd& xd, const VectorXd&, double, VectorXd& dx) {
    dx[0] = xd[0];
  };
  dynamics::DelaySpec delay;
  delay.tau = 0.2;
  delay.history = [](double t, VectorXd& x) { x[0] = t; };
  const Trajectory traj = dynamics::rollout_delayed(f, delay, x0, MatrixXd::Zero(4, 1), 0.1, 4);
  CHECK(traj.states(1, 0) == doctest::Approx(0.0 + 0.1 * (-0.2)));
  CHECK(traj.states(2, 0) == doctest::Approx(traj.states(1, 0) + 0.1 * (-0.1)));
  // From step 2 on the shifted index is inside the simulated grid.
  CHECK(traj.states(3, 0) == doctest::Approx(traj.states(2, 0) + 0.1 * traj.states(0, 0)));
}
