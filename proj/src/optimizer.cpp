#include "bfopt/optimizer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "bfopt/errors.hpp"
#include "bfopt/rng.hpp"

namespace bfopt::optimizer {

ScheduleKind schedule_kind_from_string(const std::string& name) {
  if (name == "constant") return ScheduleKind::Constant;
  if (name == "polydecay") return ScheduleKind::PolyDecay;
  throw SpecError("unknown schedule '" + name + "' (expected constant or polydecay)");
}

std::string to_string(ScheduleKind kind) {
  return kind == ScheduleKind::Constant ? "constant" : "polydecay";
}

MuMode mu_mode_from_string(const std::string& name) {
  if (name == "residual") return MuMode::AnalyticResidual;
  if (name == "estimated") return MuMode::Estimated;
  throw SpecError("unknown mu mode '" + name + "' (expected residual or estimated)");
}

std::string to_string(MuMode mode) {
  return mode == MuMode::AnalyticResidual ? "residual" : "estimated";
}

double StepSchedule::alpha(int n) const {
  if (kind == ScheduleKind::Constant) return alpha0;
  return alpha0 / std::pow(1.0 + n / n0, p_alpha);
}

double StepSchedule::beta(int n) const {
  if (kind == ScheduleKind::Constant) return beta0;
  return beta0 / std::pow(1.0 + n / n0, p_beta);
}

void StepSchedule::validate() const {
  if (!(alpha0 > 0.0) || !(beta0 > 0.0)) throw SpecError("step sizes must be > 0");
  if (kind == ScheduleKind::PolyDecay) {
    if (!(0.5 < p_alpha && p_alpha < p_beta && p_beta <= 1.0))
      throw SpecError("polydecay exponents must satisfy 0.5 < p_alpha < p_beta <= 1");
    if (!(n0 >= 1.0)) throw SpecError("polydecay offset n0 must be >= 1");
  }
}

void SolveConfig::validate() const {
  basis.validate();
  schedule.validate();
  scheme.validate();
  if (rho < 0.0) throw SpecError("penalty rho must be >= 0");
  if (!(tol > 0.0)) throw SpecError("tolerance must be > 0");
  if (!(feas_tol > 0.0)) throw SpecError("feasibility tolerance must be > 0");
  if (tol_window < 1) throw SpecError("tol window must be >= 1");
  if (max_iter < 1) throw SpecError("max_iter must be >= 1");
  if (burn_in < 1) throw SpecError("burn-in must be >= 1");
}

MatrixXd project_control(const MatrixXd& u, const VectorXd& u_min, const VectorXd& u_max) {
  if (u_min.size() != u.cols() || u_max.size() != u.cols())
    throw SpecError("control bounds do not match the number of input channels");
  MatrixXd out = u;
  for (Eigen::Index j = 0; j < out.cols(); ++j)
    out.col(j) = out.col(j).cwiseMax(u_min[j]).cwiseMin(u_max[j]);
  return out;
}

namespace {

void clamp_in_place(MatrixXd& u, const VectorXd& u_min, const VectorXd& u_max) {
  for (Eigen::Index j = 0; j < u.cols(); ++j)
    u.col(j) = u.col(j).cwiseMax(u_min[j]).cwiseMin(u_max[j]);
}

void check_problem(const ControlProblem& p) {
  if (p.n_x < 1 || p.n_u < 1) throw SpecError("problem dimensions must be >= 1");
  if (p.n_steps < 1) throw SpecError("problem needs at least one step");
  if (!(p.dt > 0.0)) throw SpecError("problem dt must be > 0");
  if (!p.rollout) throw SpecError("problem has no rollout");
  if (p.target && p.target->size() != p.n_x)
    throw SpecError("target state dimension mismatch");
  for (int j = 0; j < p.n_u; ++j)
    if (p.u_min[j] > p.u_max[j]) throw SpecError("u_min must be <= u_max");
}

double sample_std(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;  // single trial: zero by convention
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / (static_cast<double>(v.size()) - 1.0));
}

}  // namespace

DualAscentSolver::DualAscentSolver(const ControlProblem& problem, const SolveConfig& config)
    : problem_(problem), config_(config) {
  check_problem(problem_);
  config_.basis.tf = problem_.tf;
  config_.validate();
  VectorXd grid(problem_.n_steps);
  for (long t = 0; t < problem_.n_steps; ++t) grid[t] = t * problem_.dt;
  basis_rows_ = basis::basis_matrix(config_.basis, grid);
  state_.theta.resize(config_.basis.m, problem_.n_u);
  state_.theta.setZero();
  if (problem_.target) state_.mu = VectorXd::Zero(problem_.n_x);
  theta_radius_.resize(problem_.n_u);
  for (int j = 0; j < problem_.n_u; ++j) {
    const double bound = std::max(std::abs(problem_.u_min[j]), std::abs(problem_.u_max[j]));
    theta_radius_[j] = std::isfinite(bound) ? 2.0 * bound
                                            : std::numeric_limits<double>::infinity();
  }
}

double DualAscentSolver::objective(const MatrixXd& theta, const VectorXd& mu) const {
  u_scratch_.noalias() = basis_rows_ * theta;
  clamp_in_place(u_scratch_, problem_.u_min, problem_.u_max);
  try {
    problem_.rollout(u_scratch_, traj_scratch_);
    cost::CostSpec spec = problem_.cost;
    spec.rho = config_.rho;
    if (problem_.target) return cost::augmented_cost(spec, mu, traj_scratch_);
    return cost::trajectory_cost(spec, traj_scratch_);
  } catch (const DivergedError&) {
    return std::numeric_limits<double>::infinity();
  }
}

double DualAscentSolver::eval_flat(const VectorXd& flat) const {
  const long p = state_.theta.size();
  const MatrixXd theta =
      estimator::unflatten(flat.head(p), state_.theta.rows(), state_.theta.cols());
  if (flat.size() == p) return objective(theta, state_.mu);
  return objective(theta, flat.tail(flat.size() - p));
}

void DualAscentSolver::initialize() {
  state_.iter = 0;
  state_.J_history.clear();
  state_.residual_history.clear();
  if (config_.theta_init.kind == ThetaInitKind::Zeros) {
    state_.theta.setZero();
  } else {
    SplitMix64 gen(derive_seed(config_.scheme.seed, seed_tag::kThetaInit));
    for (Eigen::Index j = 0; j < state_.theta.cols(); ++j)
      for (Eigen::Index i = 0; i < state_.theta.rows(); ++i)
        state_.theta(i, j) = gen.next_symmetric(config_.theta_init.scale);
  }
  if (problem_.target) state_.mu.setZero();
}

void DualAscentSolver::record(double j_aug) {
  state_.J_history.push_back(j_aug);
  if (problem_.target) {
    cost::CostSpec spec = problem_.cost;
    state_.residual_history.push_back(cost::terminal_residual(spec, base_traj_));
  } else {
    state_.residual_history.emplace_back();
  }
}

bool DualAscentSolver::step() {
  const int n = state_.iter;

  // Base evaluation at the current iterate; reused by the forward-difference
  // estimator and by the stopping test.
  u_scratch_.noalias() = basis_rows_ * state_.theta;
  clamp_in_place(u_scratch_, problem_.u_min, problem_.u_max);
  try {
    problem_.rollout(u_scratch_, base_traj_);
  } catch (const DivergedError& e) {
    throw DivergedError("rollout diverged at iteration " + std::to_string(n), e.step());
  }
  cost::CostSpec spec = problem_.cost;
  spec.rho = config_.rho;
  double j_aug;
  VectorXd residual;
  if (problem_.target) {
    residual = cost::terminal_residual(spec, base_traj_);
    j_aug = cost::augmented_cost(spec, state_.mu, base_traj_);
  } else {
    j_aug = cost::trajectory_cost(spec, base_traj_);
  }
  if (!std::isfinite(j_aug))
    throw BasePointError("objective is non-finite at iteration " + std::to_string(n));
  record(j_aug);

  if (n >= config_.burn_in) {
    // Convergence = the objective has stalled over the trailing window and
    // the terminal constraint is met. The window guards against declaring
    // convergence during slow but steady descent, where consecutive values
    // differ by less than tol long before the optimum.
    const auto& hist = state_.J_history;
    const int back = std::min(n, config_.tol_window);
    const bool flat = std::abs(hist[n] - hist[n - back]) < config_.tol;
    const bool feasible =
        !problem_.target || residual.lpNorm<Eigen::Infinity>() <= config_.feas_tol;
    if (flat && feasible) return true;
  }

  const bool joint = problem_.target && config_.mu_mode == MuMode::Estimated;
  const VectorXd flat = joint ? estimator::flatten(state_.theta, state_.mu)
                              : estimator::flatten(state_.theta);
  const auto objective_fn = [this](const VectorXd& v) { return eval_flat(v); };
  VectorXd grad;
  try {
    grad = estimator::estimate_gradient(objective_fn, flat, config_.scheme,
                                        static_cast<std::uint64_t>(n), j_aug);
  } catch (const EstimationError&) {
    // Small parameter counts occasionally draw a rank-deficient sign matrix
    // even after the resample; central differences serve as the
    // deterministic fallback for that iteration.
    estimator::PerturbationScheme fallback = config_.scheme;
    fallback.kind = estimator::EstimatorKind::CoordinateCentral;
    grad = estimator::estimate_gradient(objective_fn, flat, fallback,
                                        static_cast<std::uint64_t>(n), j_aug);
  }

  const long p = state_.theta.size();
  const double alpha = config_.schedule.alpha(n);
  state_.theta -= alpha * estimator::unflatten(grad.head(p), state_.theta.rows(),
                                               state_.theta.cols());
  project_theta();
  if (problem_.target) {
    const double beta = config_.schedule.beta(n);
    state_.mu += beta * (joint ? VectorXd(grad.tail(problem_.n_x)) : residual);
  }
  ++state_.iter;
  return false;
}

void DualAscentSolver::project_theta() {
  // For channels with finite input bounds the coefficients are kept inside a
  // generous box as well. A single bad step near a switching surface can
  // otherwise throw theta so far out that the clamped control saturates for
  // every probe, which zeroes the measured gradient for good.
  for (Eigen::Index j = 0; j < state_.theta.cols(); ++j) {
    const double radius = theta_radius_[j];
    if (!std::isfinite(radius)) continue;
    state_.theta.col(j) = state_.theta.col(j).cwiseMax(-radius).cwiseMin(radius);
  }
}

RunResult DualAscentSolver::solve() {
  initialize();
  bool converged = false;
  while (state_.iter < config_.max_iter) {
    if (step()) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    // The loop exhausted max_iter right after an update; evaluate the final
    // iterate so the result and trace describe it.
    u_scratch_.noalias() = basis_rows_ * state_.theta;
    clamp_in_place(u_scratch_, problem_.u_min, problem_.u_max);
    problem_.rollout(u_scratch_, base_traj_);
    cost::CostSpec spec = problem_.cost;
    spec.rho = config_.rho;
    record(problem_.target ? cost::augmented_cost(spec, state_.mu, base_traj_)
                           : cost::trajectory_cost(spec, base_traj_));
  }

  RunResult out;
  out.theta_star = state_.theta;
  out.mu_star = state_.mu;
  out.trajectory = base_traj_;
  out.terminal_state = base_traj_.terminal_state();
  out.J_star = cost::trajectory_cost(problem_.cost, base_traj_);
  out.iterations = state_.iter;
  out.converged = converged;
  out.J_trace = state_.J_history;
  out.residual_norm_trace.reserve(state_.residual_history.size());
  for (const VectorXd& r : state_.residual_history)
    out.residual_norm_trace.push_back(r.size() ? r.norm() : 0.0);
  return out;
}

RunResult solve(const ControlProblem& problem, const SolveConfig& config) {
  DualAscentSolver solver(problem, config);
  return solver.solve();
}

MultiTrialResult multi_trial(const ControlProblem& problem, const SolveConfig& config,
                             int trials, std::uint64_t base_seed, int jobs) {
  if (trials < 1) throw SpecError("multi_trial requires at least one trial");
  MultiTrialResult out;
  out.trials.resize(trials);
  for (int i = 0; i < trials; ++i) out.seeds.push_back(base_seed + i);

  const int workers = std::max(1, std::min(jobs, trials));
  std::atomic<int> next{0};
  const auto worker = [&]() {
    for (int i = next.fetch_add(1); i < trials; i = next.fetch_add(1)) {
      TrialOutcome& trial = out.trials[i];
      trial.seed = base_seed + i;
      SolveConfig cfg = config;
      cfg.scheme.seed = trial.seed;
      try {
        trial.result = solve(problem, cfg);
        trial.ok = true;
      } catch (const Error& e) {
        trial.ok = false;
        trial.error = e.what();
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  std::vector<double> costs;
  std::vector<VectorXd> terminals;
  double residual_acc = 0.0;
  for (const TrialOutcome& trial : out.trials) {
    if (!trial.ok) {
      ++out.failed_count;
      continue;
    }
    if (trial.result.converged) ++out.converged_count;
    costs.push_back(trial.result.J_star);
    terminals.push_back(trial.result.terminal_state);
    if (problem.target)
      residual_acc += (trial.result.terminal_state - *problem.target).norm();
  }
  if (!costs.empty()) {
    double mean = 0.0;
    for (double j : costs) mean += j;
    mean /= static_cast<double>(costs.size());
    out.mean_J = mean;
    out.std_J = sample_std(costs, mean);
    out.mean_terminal = VectorXd::Zero(problem.n_x);
    for (const VectorXd& x : terminals) out.mean_terminal += x;
    out.mean_terminal /= static_cast<double>(terminals.size());
    out.std_terminal = VectorXd::Zero(problem.n_x);
    if (terminals.size() > 1) {
      for (const VectorXd& x : terminals)
        out.std_terminal += (x - out.mean_terminal).cwiseAbs2();
      out.std_terminal =
          (out.std_terminal / (static_cast<double>(terminals.size()) - 1.0)).cwiseSqrt();
    }
    out.mean_residual_norm = residual_acc / static_cast<double>(costs.size());
  }
  return out;
}

std::vector<SweepRow> sweep_m(const ControlProblem& problem, const SolveConfig& config,
                              std::vector<int> m_values, int trials,
                              std::uint64_t base_seed, int jobs) {
  if (m_values.empty()) throw SpecError("sweep requires at least one basis size");
  std::sort(m_values.begin(), m_values.end());
  std::vector<SweepRow> rows;
  for (int m : m_values) {
    SweepRow row;
    row.m = m;
    SolveConfig cfg = config;
    cfg.basis.m = m;
    try {
      const MultiTrialResult res = multi_trial(problem, cfg, trials, base_seed, jobs);
      if (res.failed_count == static_cast<int>(res.trials.size()))
        throw EstimationError("all trials failed for m = " + std::to_string(m));
      row.mean_J = res.mean_J;
      row.std_J = res.std_J;
      row.mean_residual_norm = res.mean_residual_norm;
      row.ok = true;
    } catch (const Error& e) {
      row.ok = false;
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace bfopt::optimizer
