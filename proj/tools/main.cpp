#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "bfopt/errors.hpp"
#include "bfopt/oracle.hpp"
#include "bfopt/optimizer.hpp"
#include "bfopt/problem.hpp"

namespace {

using bfopt::optimizer::MultiTrialResult;
using bfopt::optimizer::SolveConfig;
using bfopt::optimizer::SweepRow;
using bfopt::optimizer::TrialOutcome;

constexpr int kExitValidation = 2;
constexpr int kExitAllDiverged = 3;

/// One number format everywhere: 12 significant digits, C locale, '.' radix.
std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::string fmt(const Eigen::VectorXd& v) {
  std::string out = "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += fmt(v[i]);
  }
  return out + "]";
}

struct SolverFlags {
  std::optional<std::string> basis, estimator, mu_mode, schedule;
  std::optional<int> m, samples, max_iter, tol_window;
  std::optional<double> alpha, beta, rho, epsilon, tol, feas_tol;
};

struct CommonArgs {
  std::string out_dir = "out";
  std::uint64_t seed = 42;
  int trials = 1;
  int jobs = 0;  // 0 = available parallelism
  bool quiet = false;
  SolverFlags solver;
};

void add_common_flags(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--out", args.out_dir, "Output directory");
  cmd->add_option("--seed", args.seed, "Base seed; trial k uses seed + k");
  cmd->add_option("--trials", args.trials, "Number of independent trials")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--jobs", args.jobs, "Worker threads (default: hardware parallelism)");
  cmd->add_flag("--quiet", args.quiet, "Suppress progress output");
  cmd->add_option("--basis", args.solver.basis, "chebyshev|legendre|fourier");
  cmd->add_option("--m", args.solver.m, "Number of basis functions");
  cmd->add_option("--alpha", args.solver.alpha, "Parameter step size");
  cmd->add_option("--beta", args.solver.beta, "Multiplier step size");
  cmd->add_option("--rho", args.solver.rho, "Quadratic penalty weight");
  cmd->add_option("--epsilon", args.solver.epsilon, "Perturbation magnitude");
  cmd->add_option("--samples", args.solver.samples, "Perturbation samples (0 = 2p)");
  cmd->add_option("--tol", args.solver.tol, "Stop when |J_{n} - J_{n-1}| < tol");
  cmd->add_option("--feas-tol", args.solver.feas_tol,
                  "Terminal residual bound required at the stop");
  cmd->add_option("--tol-window", args.solver.tol_window,
                  "Iterations over which the J change is measured");
  cmd->add_option("--max-iter", args.solver.max_iter, "Iteration cap");
  cmd->add_option("--estimator", args.solver.estimator, "ls|central");
  cmd->add_option("--mu-mode", args.solver.mu_mode, "residual|estimated");
  cmd->add_option("--schedule", args.solver.schedule, "constant|polydecay");
}

bfopt::problem::ProblemSpec load_problem(const std::string& ref) {
  for (const std::string& name : bfopt::problem::builtin_names())
    if (name == ref) return bfopt::problem::builtin(name);
  return bfopt::problem::parse_problem_file(ref);
}

void apply_flags(bfopt::problem::ProblemSpec& spec, const SolverFlags& flags) {
  auto& s = spec.solver;
  if (flags.basis) s.basis = bfopt::basis::basis_kind_from_string(*flags.basis);
  if (flags.m) s.m = *flags.m;
  if (flags.alpha) s.alpha = *flags.alpha;
  if (flags.beta) s.beta = *flags.beta;
  if (flags.rho) s.rho = *flags.rho;
  if (flags.epsilon) s.epsilon = *flags.epsilon;
  if (flags.samples) s.samples = *flags.samples;
  if (flags.tol) s.tol = *flags.tol;
  if (flags.feas_tol) s.feas_tol = *flags.feas_tol;
  if (flags.tol_window) s.tol_window = *flags.tol_window;
  if (flags.max_iter) s.max_iter = *flags.max_iter;
  if (flags.estimator) s.estimator = bfopt::estimator::estimator_kind_from_string(*flags.estimator);
  if (flags.mu_mode) s.mu_mode = bfopt::optimizer::mu_mode_from_string(*flags.mu_mode);
  if (flags.schedule) s.schedule = bfopt::optimizer::schedule_kind_from_string(*flags.schedule);
  spec.validate();
}

int effective_jobs(const CommonArgs& args) {
  if (args.jobs > 0) return args.jobs;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw bfopt::SpecError("cannot write '" + path.string() + "'");
  out << content;
}

std::string trajectory_csv(const bfopt::problem::ProblemSpec& spec,
                           const bfopt::dynamics::Trajectory& traj) {
  std::ostringstream os;
  os << "t";
  for (int i = 1; i <= spec.n_x; ++i) os << ",x" << i;
  for (int i = 1; i <= spec.n_u; ++i) os << ",u" << i;
  os << "\n";
  const long rows = traj.states.rows();
  for (long r = 0; r < rows; ++r) {
    os << fmt(traj.times[r]);
    for (int i = 0; i < spec.n_x; ++i) os << "," << fmt(traj.states(r, i));
    for (int i = 0; i < spec.n_u; ++i) {
      os << ",";
      if (r < rows - 1) os << fmt(traj.inputs(r, i));  // inputs blank on the final row
    }
    os << "\n";
  }
  return os.str();
}

std::string convergence_csv(const bfopt::optimizer::RunResult& run) {
  std::ostringstream os;
  os << "iter,J,residual_norm\n";
  for (std::size_t i = 0; i < run.J_trace.size(); ++i)
    os << i << "," << fmt(run.J_trace[i]) << "," << fmt(run.residual_norm_trace[i]) << "\n";
  return os.str();
}

std::string params_csv(const MultiTrialResult& result, bool has_target) {
  std::ostringstream os;
  long p = 0, n_mu = 0;
  for (const TrialOutcome& trial : result.trials)
    if (trial.ok) {
      p = trial.result.theta_star.size();
      n_mu = has_target ? trial.result.mu_star.size() : 0;
      break;
    }
  os << "trial";
  for (long i = 1; i <= p; ++i) os << ",theta_" << i;
  for (long i = 1; i <= n_mu; ++i) os << ",mu_" << i;
  os << "\n";
  int trial_no = 0;
  for (const TrialOutcome& trial : result.trials) {
    ++trial_no;
    if (!trial.ok) continue;
    os << trial_no;
    const Eigen::VectorXd flat = bfopt::estimator::flatten(trial.result.theta_star);
    for (long i = 0; i < p; ++i) os << "," << fmt(flat[i]);
    for (long i = 0; i < n_mu; ++i) os << "," << fmt(trial.result.mu_star[i]);
    os << "\n";
  }
  return os.str();
}

std::string json_array(const Eigen::VectorXd& v) {
  std::string out = "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += fmt(v[i]);
  }
  return out + "]";
}

std::string summary_json(const bfopt::problem::ProblemSpec& spec,
                         const MultiTrialResult& result, int jobs) {
  const auto& s = spec.solver;
  std::ostringstream os;
  os << "{\n";
  os << "  \"problem\": \"" << spec.name << "\",\n";
  os << "  \"config\": {\n";
  os << "    \"basis\": \"" << bfopt::basis::to_string(s.basis) << "\",\n";
  os << "    \"m\": " << s.m << ",\n";
  os << "    \"alpha\": " << fmt(s.alpha) << ",\n";
  os << "    \"beta\": " << fmt(s.beta) << ",\n";
  os << "    \"schedule\": \"" << bfopt::optimizer::to_string(s.schedule) << "\",\n";
  os << "    \"rho\": " << fmt(s.rho) << ",\n";
  os << "    \"epsilon\": " << fmt(s.epsilon) << ",\n";
  os << "    \"samples\": " << s.samples << ",\n";
  os << "    \"tol\": " << fmt(s.tol) << ",\n";
  os << "    \"feas_tol\": " << fmt(s.feas_tol) << ",\n";
  os << "    \"tol_window\": " << s.tol_window << ",\n";
  os << "    \"max_iter\": " << s.max_iter << ",\n";
  os << "    \"estimator\": \"" << bfopt::estimator::to_string(s.estimator) << "\",\n";
  os << "    \"mu_mode\": \"" << bfopt::optimizer::to_string(s.mu_mode) << "\",\n";
  os << "    \"jobs\": " << jobs << "\n";
  os << "  },\n";
  os << "  \"trials\": " << result.trials.size() << ",\n";
  os << "  \"converged\": " << result.converged_count << ",\n";
  os << "  \"failed\": " << result.failed_count << ",\n";
  os << "  \"mean_J\": " << fmt(result.mean_J) << ",\n";
  os << "  \"std_J\": " << fmt(result.std_J) << ",\n";
  os << "  \"mean_terminal\": " << json_array(result.mean_terminal) << ",\n";
  os << "  \"std_terminal\": " << json_array(result.std_terminal) << ",\n";
  os << "  \"seeds\": [";
  for (std::size_t i = 0; i < result.seeds.size(); ++i) {
    if (i) os << ", ";
    os << result.seeds[i];
  }
  os << "],\n";
  os << "  \"per_trial\": [\n";
  for (std::size_t i = 0; i < result.trials.size(); ++i) {
    const TrialOutcome& t = result.trials[i];
    os << "    {\"seed\": " << t.seed << ", \"ok\": " << (t.ok ? "true" : "false");
    if (t.ok) {
      os << ", \"converged\": " << (t.result.converged ? "true" : "false");
      os << ", \"iterations\": " << t.result.iterations;
      os << ", \"J\": " << fmt(t.result.J_star);
      os << ", \"terminal\": " << json_array(t.result.terminal_state);
    } else {
      os << ", \"error\": \"" << t.error << "\"";
    }
    os << "}" << (i + 1 < result.trials.size() ? "," : "") << "\n";
  }
  os << "  ]\n";
  os << "}\n";
  return os.str();
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "m,mean_J,std_J,mean_residual_norm\n";
  for (const SweepRow& row : rows) {
    if (!row.ok) continue;
    os << row.m << "," << fmt(row.mean_J) << "," << fmt(row.std_J) << ","
       << fmt(row.mean_residual_norm) << "\n";
  }
  return os.str();
}

int cmd_solve(const std::string& problem_ref, const CommonArgs& args) {
  auto spec = load_problem(problem_ref);
  apply_flags(spec, args.solver);
  const auto problem = bfopt::problem::make_control_problem(spec);
  const SolveConfig config = bfopt::problem::make_solve_config(spec);
  const int jobs = effective_jobs(args);

  const auto started = std::chrono::steady_clock::now();
  const MultiTrialResult result =
      bfopt::optimizer::multi_trial(problem, config, args.trials, args.seed, jobs);
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  if (result.failed_count == static_cast<int>(result.trials.size())) {
    std::cerr << "all " << args.trials << " trials diverged";
    if (!result.trials.empty()) std::cerr << ": " << result.trials.front().error;
    std::cerr << "\n";
    return kExitAllDiverged;
  }

  const std::filesystem::path out_dir(args.out_dir);
  std::filesystem::create_directories(out_dir);
  const TrialOutcome* lead = nullptr;
  for (const TrialOutcome& trial : result.trials)
    if (trial.ok) {
      lead = &trial;
      break;
    }
  write_file(out_dir / "trajectory.csv", trajectory_csv(spec, lead->result.trajectory));
  write_file(out_dir / "convergence.csv", convergence_csv(lead->result));
  write_file(out_dir / "params.csv", params_csv(result, spec.xf.has_value()));
  write_file(out_dir / "summary.json", summary_json(spec, result, jobs));

  if (!args.quiet) {
    std::cout << spec.name << ": trials=" << result.trials.size()
              << " converged=" << result.converged_count
              << " failed=" << result.failed_count << " mean_J=" << fmt(result.mean_J)
              << " std_J=" << fmt(result.std_J)
              << " mean_terminal=" << fmt(result.mean_terminal) << " ("
              << fmt(elapsed) << " s)\n";
  }
  return 0;
}

int cmd_sweep(const std::string& problem_ref, const std::string& m_list,
              const CommonArgs& args) {
  auto spec = load_problem(problem_ref);
  apply_flags(spec, args.solver);

  std::vector<int> m_values;
  std::stringstream ss(m_list);
  std::string token;
  while (std::getline(ss, token, ',')) {
    try {
      std::size_t used = 0;
      const int m = std::stoi(token, &used);
      if (used != token.size() || m < 1) throw std::invalid_argument(token);
      m_values.push_back(m);
    } catch (const std::exception&) {
      throw bfopt::SpecError("invalid --m-list entry '" + token + "'");
    }
  }
  if (m_values.empty()) throw bfopt::SpecError("--m-list must not be empty");

  const auto problem = bfopt::problem::make_control_problem(spec);
  const SolveConfig config = bfopt::problem::make_solve_config(spec);
  const int jobs = effective_jobs(args);
  const auto rows =
      bfopt::optimizer::sweep_m(problem, config, m_values, args.trials, args.seed, jobs);

  bool any_ok = false;
  for (const SweepRow& row : rows) {
    if (row.ok) {
      any_ok = true;
      if (!args.quiet)
        std::cout << spec.name << " m=" << row.m << ": mean_J=" << fmt(row.mean_J)
                  << " std_J=" << fmt(row.std_J)
                  << " mean_residual_norm=" << fmt(row.mean_residual_norm) << "\n";
    } else {
      std::cerr << "m=" << row.m << " failed: " << row.error << "\n";
    }
  }
  if (!any_ok) {
    std::cerr << "every basis size in the sweep failed\n";
    return kExitAllDiverged;
  }

  const std::filesystem::path out_dir(args.out_dir);
  std::filesystem::create_directories(out_dir);
  write_file(out_dir / "sweep.csv", sweep_csv(rows));
  return 0;
}

int cmd_oracle(const std::string& name) {
  if (name != "ex1") {
    std::cerr << "no reference solution for '" << name << "' (available: ex1)\n";
    return kExitValidation;
  }
  const auto solution = bfopt::oracle::ex1_optimal();
  std::printf("J*=%.6f terminal=%.6f\n", solution.cost, solution.terminal);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Model-free trajectory optimization with basis-function controls"};
  app.require_subcommand(1);

  CommonArgs solve_args, sweep_args;
  std::string solve_problem, sweep_problem, sweep_m_list, oracle_name;

  CLI::App* solve = app.add_subcommand("solve", "Optimize a problem over several seeds");
  solve->add_option("problem", solve_problem, "Builtin name (ex1, ex2, ex3) or file path")
      ->required();
  add_common_flags(solve, solve_args);

  CLI::App* sweep = app.add_subcommand("sweep", "Repeat the solve for several basis sizes");
  sweep->add_option("problem", sweep_problem, "Builtin name or file path")->required();
  sweep->add_option("--m-list", sweep_m_list, "Comma-separated basis sizes, e.g. 2,4,8")
      ->required();
  add_common_flags(sweep, sweep_args);

  CLI::App* oracle = app.add_subcommand("oracle", "Print the reference solution");
  oracle->add_option("problem", oracle_name, "Problem with a reference solution (ex1)")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (solve->parsed()) return cmd_solve(solve_problem, solve_args);
    if (sweep->parsed()) return cmd_sweep(sweep_problem, sweep_m_list, sweep_args);
    if (oracle->parsed()) return cmd_oracle(oracle_name);
  } catch (const bfopt::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitValidation;
}
