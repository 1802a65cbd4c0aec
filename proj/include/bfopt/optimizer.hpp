#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bfopt/basis.hpp"
#include "bfopt/cost.hpp"
#include "bfopt/dynamics.hpp"
#include "bfopt/estimator.hpp"

namespace bfopt::optimizer {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class ScheduleKind { Constant, PolyDecay };

ScheduleKind schedule_kind_from_string(const std::string& name);
std::string to_string(ScheduleKind kind);

/// Primal/dual step sizes. PolyDecay uses
///   alpha_n = alpha0 / (1 + n/n0)^p_alpha,  beta_n = beta0 / (1 + n/n0)^p_beta
/// with 0.5 < p_alpha < p_beta <= 1, which makes the steps square-summable
/// but not summable and drives beta_n/alpha_n to zero (the two-timescale
/// conditions for almost-sure convergence to a fixed point).
struct StepSchedule {
  ScheduleKind kind = ScheduleKind::Constant;
  double alpha0 = 0.01;
  double beta0 = 0.01;
  double p_alpha = 0.6;
  double p_beta = 0.8;
  double n0 = 100.0;

  double alpha(int n) const;
  double beta(int n) const;
  void validate() const;
};

/// How the multiplier ascent direction is obtained: the terminal residual of
/// the base rollout (which equals dJ/dmu exactly), or a sampled estimate with
/// mu appended to the perturbed parameter vector.
enum class MuMode { AnalyticResidual, Estimated };

MuMode mu_mode_from_string(const std::string& name);
std::string to_string(MuMode mode);

enum class ThetaInitKind { Zeros, UniformRandom };

struct ThetaInit {
  ThetaInitKind kind = ThetaInitKind::UniformRandom;
  double scale = 0.1;
};

struct SolveConfig {
  basis::BasisSet basis;   // tf is overwritten with the problem horizon
  StepSchedule schedule;
  double rho = 1.0;
  double tol = 0.01;       // stop when J has changed by less than tol ...
  double feas_tol = 0.02;  // ... and the terminal residual is within this bound
  int tol_window = 100;    // iterations over which the J change is measured
  int max_iter = 30000;
  int burn_in = 10;        // iterations before the stopping test is armed
  estimator::PerturbationScheme scheme;
  MuMode mu_mode = MuMode::AnalyticResidual;
  ThetaInit theta_init;

  void validate() const;
};

/// A problem lowered to the callables the optimizer needs. `rollout` forward
/// simulates the appropriate dynamics variant; it must be safe to call from
/// several threads at once.
struct ControlProblem {
  std::string name;
  int n_x = 0;
  int n_u = 0;
  long n_steps = 0;
  double dt = 0.0;
  double tf = 0.0;
  VectorXd x0;
  std::optional<VectorXd> target;
  VectorXd u_min, u_max;
  cost::CostSpec cost;
  std::function<void(const MatrixXd& u, dynamics::Trajectory& out)> rollout;
};

struct OptimizerState {
  MatrixXd theta;                  // m x n_u coefficient matrix
  VectorXd mu;                     // empty when the problem has no target
  int iter = 0;                    // completed parameter updates
  std::vector<double> J_history;   // augmented objective per evaluated iterate
  std::vector<VectorXd> residual_history;
};

struct RunResult {
  MatrixXd theta_star;
  VectorXd mu_star;
  double J_star = 0.0;             // plain trajectory cost of the final iterate
  VectorXd terminal_state;
  dynamics::Trajectory trajectory;
  int iterations = 0;
  bool converged = false;
  std::vector<double> J_trace;     // augmented objective, one entry per iterate
  std::vector<double> residual_norm_trace;
};

struct TrialOutcome {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  RunResult result;
};

struct MultiTrialResult {
  std::vector<TrialOutcome> trials;
  std::vector<std::uint64_t> seeds;
  int converged_count = 0;
  int failed_count = 0;            // diverged or estimator-failed trials
  double mean_J = 0.0;
  double std_J = 0.0;
  VectorXd mean_terminal;
  VectorXd std_terminal;
  double mean_residual_norm = 0.0;
};

struct SweepRow {
  int m = 0;
  bool ok = false;
  std::string error;
  double mean_J = 0.0;
  double std_J = 0.0;
  double mean_residual_norm = 0.0;
};

/// Componentwise clamp of the control matrix into [u_min, u_max].
MatrixXd project_control(const MatrixXd& u, const VectorXd& u_min, const VectorXd& u_max);

class DualAscentSolver {
 public:
  DualAscentSolver(const ControlProblem& problem, const SolveConfig& config);

  /// Builds the control from theta, clamps it, rolls the system out and
  /// returns the augmented objective (plain cost when there is no target).
  /// Diverged rollouts come back as +infinity.
  double objective(const MatrixXd& theta, const VectorXd& mu) const;

  /// Resets state: theta from the configured initializer, mu to zero.
  void initialize();

  /// Evaluates the current iterate, records the trace, and either detects
  /// convergence (returns true) or performs one projected-gradient /
  /// dual-ascent update (returns false).
  bool step();

  RunResult solve();

  const OptimizerState& state() const { return state_; }
  const SolveConfig& config() const { return config_; }

 private:
  double eval_flat(const VectorXd& flat) const;
  void record(double j_aug);
  void project_theta();

  const ControlProblem& problem_;
  SolveConfig config_;
  MatrixXd basis_rows_;            // n_steps x m, fixed per solve
  VectorXd theta_radius_;          // per-channel coefficient box, inf = free
  OptimizerState state_;

  // Rollout scratch, reused across the many objective evaluations of one
  // solve; a solver instance is therefore not shareable between threads.
  mutable MatrixXd u_scratch_;
  mutable dynamics::Trajectory traj_scratch_;
  mutable dynamics::Trajectory base_traj_;
};

RunResult solve(const ControlProblem& problem, const SolveConfig& config);

/// Runs `trials` independent solves with seeds base_seed, base_seed+1, ...
/// and aggregates mean / sample standard deviation of the final cost and
/// terminal state. Failed trials are recorded, counted, and excluded from the
/// statistics. `jobs` bounds the number of worker threads; results do not
/// depend on it.
MultiTrialResult multi_trial(const ControlProblem& problem, const SolveConfig& config,
                             int trials, std::uint64_t base_seed, int jobs = 1);

/// multi_trial for each basis size in m_values (ascending); failures are
/// captured per row and the sweep continues.
std::vector<SweepRow> sweep_m(const ControlProblem& problem, const SolveConfig& config,
                              std::vector<int> m_values, int trials,
                              std::uint64_t base_seed, int jobs = 1);

}  // namespace bfopt::optimizer
