#pragma once

#include <Eigen/Core>
#include <functional>
#include <optional>

#include "bfopt/dynamics.hpp"

namespace bfopt::cost {

using Eigen::VectorXd;

using StageFn = std::function<double(const VectorXd& x, const VectorXd& u, double t)>;
using TerminalFn = std::function<double(const VectorXd& x)>;

struct CostSpec {
  StageFn stage;                  // running cost rate L(x, u, t)
  TerminalFn terminal;            // terminal cost Psi(x(tf)); may be null for 0
  std::optional<VectorXd> target; // fixed terminal state, absent for free endpoint
  double rho = 1.0;               // quadratic penalty weight, >= 0
};

/// Psi(x_N) + sum_t L(x_{t+1}, u_t, t_{t+1}) * dt: each Euler step is charged
/// at the state it lands on, together with the input that produced it.
double trajectory_cost(const CostSpec& spec, const dynamics::Trajectory& traj);

/// trajectory_cost + mu' (x_N - xf) + (rho/2) |x_N - xf|^2. Requires a target.
double augmented_cost(const CostSpec& spec, const VectorXd& mu,
                      const dynamics::Trajectory& traj);

/// x_N - xf. Requires a target.
VectorXd terminal_residual(const CostSpec& spec, const dynamics::Trajectory& traj);

}  // namespace bfopt::cost
