#include "bfopt/dynamics.hpp"

#include <cmath>

#include "bfopt/errors.hpp"

namespace bfopt::dynamics {

namespace {

void check_rollout_args(const VectorXd& x0, const MatrixXd& u, double dt, long n_steps) {
  if (!(dt > 0.0)) throw SpecError("rollout requires dt > 0");
  if (n_steps < 1) throw SpecError("rollout requires at least one step");
  if (u.rows() != n_steps)
    throw SpecError("input matrix has " + std::to_string(u.rows()) + " rows, expected " +
                    std::to_string(n_steps));
  if (x0.size() == 0) throw SpecError("empty initial state");
}

void init_trajectory(const VectorXd& x0, const MatrixXd& u, double dt, long n_steps,
                     Trajectory& out) {
  out.times.resize(n_steps + 1);
  for (long t = 0; t <= n_steps; ++t) out.times[t] = t * dt;
  out.states.resize(n_steps + 1, x0.size());
  out.states.row(0) = x0;
  out.inputs = u;
}

void check_state(const Eigen::Ref<const Eigen::RowVectorXd>& x, long step) {
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double v = x[i];
    if (!std::isfinite(v) || std::abs(v) > kStateLimit)
      throw DivergedError("rollout diverged", step);
  }
}

}  // namespace

void rollout_smooth_into(const SmoothFieldFn& f, const VectorXd& x0, const MatrixXd& u,
                         double dt, long n_steps, Trajectory& out) {
  check_rollout_args(x0, u, dt, n_steps);
  init_trajectory(x0, u, dt, n_steps, out);
  VectorXd x = x0, ut(u.cols()), dx(x0.size());
  for (long t = 0; t < n_steps; ++t) {
    ut = u.row(t);
    f(x, ut, t * dt, dx);
    x += dt * dx;
    out.states.row(t + 1) = x;
    check_state(out.states.row(t + 1), t);
  }
}

Trajectory rollout_smooth(const SmoothFieldFn& f, const VectorXd& x0, const MatrixXd& u,
                          double dt, long n_steps) {
  Trajectory out;
  rollout_smooth_into(f, x0, u, dt, n_steps, out);
  return out;
}

std::size_t classify_region(const RegionSpec& regions, const VectorXd& x, double t) {
  for (std::size_t i = 0; i < regions.regions.size(); ++i)
    if (regions.regions[i].guard(x, t)) return i;
  throw SpecError("no region guard matches the state (missing catch-all)");
}

void rollout_switched_into(const RegionSpec& regions, const VectorXd& x0,
                           const MatrixXd& u, double dt, long n_steps, Trajectory& out) {
  check_rollout_args(x0, u, dt, n_steps);
  init_trajectory(x0, u, dt, n_steps, out);
  VectorXd x = x0, ut(u.cols()), dx(x0.size());
  for (long t = 0; t < n_steps; ++t) {
    ut = u.row(t);
    // Guards are evaluated on the pre-step state; no event localization
    // within a step.
    const std::size_t idx = classify_region(regions, x, t * dt);
    regions.regions[idx].field(x, ut, t * dt, dx);
    x += dt * dx;
    out.states.row(t + 1) = x;
    check_state(out.states.row(t + 1), t);
  }
}

Trajectory rollout_switched(const RegionSpec& regions, const VectorXd& x0,
                            const MatrixXd& u, double dt, long n_steps) {
  Trajectory out;
  rollout_switched_into(regions, x0, u, dt, n_steps, out);
  return out;
}

void rollout_delayed_into(const DelayedFieldFn& f, const DelaySpec& delay,
                          const VectorXd& x0, const MatrixXd& u, double dt, long n_steps,
                          Trajectory& out) {
  check_rollout_args(x0, u, dt, n_steps);
  if (!(delay.tau > 0.0)) throw SpecError("delay tau must be > 0");
  const double ratio = delay.tau / dt;
  const long d = std::lround(ratio);
  if (d < 1 || std::abs(ratio - static_cast<double>(d)) > 1e-9)
    throw SpecError("delay tau must be an integer multiple of dt");
  if (!delay.history) throw SpecError("delayed rollout requires a history function");

  init_trajectory(x0, u, dt, n_steps, out);
  VectorXd x = x0, xd(x0.size()), ut(u.cols()), dx(x0.size());
  for (long t = 0; t < n_steps; ++t) {
    const long shifted = t - d;
    if (shifted >= 0)
      xd = out.states.row(shifted);
    else
      delay.history(shifted * dt, xd);
    ut = u.row(t);
    f(x, xd, ut, t * dt, dx);
    x += dt * dx;
    out.states.row(t + 1) = x;
    check_state(out.states.row(t + 1), t);
  }
}

Trajectory rollout_delayed(const DelayedFieldFn& f, const DelaySpec& delay,
                           const VectorXd& x0, const MatrixXd& u, double dt, long n_steps) {
  Trajectory out;
  rollout_delayed_into(f, delay, x0, u, dt, n_steps, out);
  return out;
}

}  // namespace bfopt::dynamics
