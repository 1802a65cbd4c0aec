#include "bfopt/cost.hpp"

#include <cmath>

#include "bfopt/errors.hpp"

namespace bfopt::cost {

double trajectory_cost(const CostSpec& spec, const dynamics::Trajectory& traj) {
  if (!spec.stage) throw SpecError("cost spec has no stage cost");
  const long n = traj.steps();
  const double dt = traj.times[1] - traj.times[0];
  // The stage cost of step t is charged at the post-step state, pairing
  // x_{t+1} with the input u_t that produced it.
  double sum = 0.0;
  VectorXd x(traj.states.cols()), u(traj.inputs.cols());
  for (long t = 0; t < n; ++t) {
    x = traj.states.row(t + 1);
    u = traj.inputs.row(t);
    const double rate = spec.stage(x, u, traj.times[t + 1]);
    if (!std::isfinite(rate)) throw DivergedError("non-finite stage cost", t);
    sum += rate * dt;
  }
  if (spec.terminal) {
    const double psi = spec.terminal(traj.terminal_state());
    if (!std::isfinite(psi)) throw DivergedError("non-finite terminal cost", n);
    sum += psi;
  }
  return sum;
}

VectorXd terminal_residual(const CostSpec& spec, const dynamics::Trajectory& traj) {
  if (!spec.target) throw SpecError("terminal_residual requires a target terminal state");
  if (spec.target->size() != traj.states.cols())
    throw SpecError("target dimension does not match the state dimension");
  return traj.terminal_state() - *spec.target;
}

double augmented_cost(const CostSpec& spec, const VectorXd& mu,
                      const dynamics::Trajectory& traj) {
  const VectorXd r = terminal_residual(spec, traj);
  if (mu.size() != r.size())
    throw SpecError("multiplier dimension does not match the state dimension");
  if (spec.rho < 0.0) throw SpecError("penalty weight rho must be >= 0");
  return trajectory_cost(spec, traj) + mu.dot(r) + 0.5 * spec.rho * r.squaredNorm();
}

}  // namespace bfopt::cost
