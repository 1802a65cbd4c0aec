#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <functional>
#include <vector>

namespace bfopt::dynamics {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Writes dx = f(x, u, t) into dx (preallocated to n_x).
using SmoothFieldFn =
    std::function<void(const VectorXd& x, const VectorXd& u, double t, VectorXd& dx)>;

/// Delayed variant, dx = f(x, x(t - tau), u, t).
using DelayedFieldFn = std::function<void(const VectorXd& x, const VectorXd& xd,
                                          const VectorXd& u, double t, VectorXd& dx)>;

using GuardFn = std::function<bool(const VectorXd& x, double t)>;

/// One region of a state-dependent switched system. Guards form a decision
/// list: the first matching entry wins, and the final entry is expected to be
/// a catch-all.
struct Region {
  GuardFn guard;
  SmoothFieldFn field;
};

struct RegionSpec {
  std::vector<Region> regions;
};

/// Constant state delay with a history function on [-tau, 0).
struct DelaySpec {
  double tau = 0.0;
  std::function<void(double t, VectorXd& out)> history;
};

/// Fixed-step trajectory: times has N+1 uniform entries, states one row per
/// grid point, inputs one row per step.
struct Trajectory {
  VectorXd times;
  MatrixXd states;   // (N+1) x n_x
  MatrixXd inputs;   // N x n_u

  long steps() const { return inputs.rows(); }
  Eigen::VectorXd terminal_state() const { return states.row(states.rows() - 1); }
};

/// States larger than this in magnitude abort the rollout as diverged.
inline constexpr double kStateLimit = 1e9;

void rollout_smooth_into(const SmoothFieldFn& f, const VectorXd& x0, const MatrixXd& u,
                         double dt, long n_steps, Trajectory& out);
Trajectory rollout_smooth(const SmoothFieldFn& f, const VectorXd& x0, const MatrixXd& u,
                          double dt, long n_steps);

/// Index (0-based) of the first region whose guard matches x. Throws
/// SpecError if no guard matches (missing catch-all).
std::size_t classify_region(const RegionSpec& regions, const VectorXd& x, double t = 0.0);

void rollout_switched_into(const RegionSpec& regions, const VectorXd& x0,
                           const MatrixXd& u, double dt, long n_steps, Trajectory& out);
Trajectory rollout_switched(const RegionSpec& regions, const VectorXd& x0,
                            const MatrixXd& u, double dt, long n_steps);

void rollout_delayed_into(const DelayedFieldFn& f, const DelaySpec& delay,
                          const VectorXd& x0, const MatrixXd& u, double dt, long n_steps,
                          Trajectory& out);
Trajectory rollout_delayed(const DelayedFieldFn& f, const DelaySpec& delay,
                           const VectorXd& x0, const MatrixXd& u, double dt, long n_steps);

}  // namespace bfopt::dynamics
