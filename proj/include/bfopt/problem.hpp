#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "bfopt/expr.hpp"
#include "bfopt/optimizer.hpp"

namespace bfopt::problem {

using Eigen::VectorXd;

enum class DynamicsKind { Smooth, Switched, Delayed };

/// An expression together with its source text and compiled form.
struct ExprDef {
  std::string text;
  expr::ExprPtr ast;
  expr::CompiledExpr code;
};

struct RegionDef {
  std::string guard_text;
  expr::GuardPtr guard;
  expr::CompiledGuard compiled_guard;
  std::vector<ExprDef> f;  // n_x right-hand sides
};

/// Per-problem solver settings; files and builtins may override any subset,
/// and command-line flags override these in turn.
struct SolverSettings {
  basis::BasisKind basis = basis::BasisKind::Chebyshev;
  int m = 4;
  double alpha = 0.01;
  double beta = 0.01;
  optimizer::ScheduleKind schedule = optimizer::ScheduleKind::Constant;
  double rho = 1.0;
  double epsilon = 0.01;
  int samples = 0;  // 0 = twice the parameter count
  double tol = 0.01;
  double feas_tol = 0.02;
  int tol_window = 100;
  int max_iter = 30000;
  std::uint64_t seed = 42;
  estimator::EstimatorKind estimator = estimator::EstimatorKind::RandomizedLeastSquares;
  optimizer::MuMode mu_mode = optimizer::MuMode::AnalyticResidual;
};

struct ProblemSpec {
  std::string name;
  int n_x = 0;
  int n_u = 0;
  double tf = 0.0;
  double dt = 0.0;
  VectorXd x0;
  std::optional<VectorXd> xf;
  VectorXd u_min, u_max;  // +-infinity when unbounded

  DynamicsKind dynamics = DynamicsKind::Smooth;
  std::vector<ExprDef> f;          // smooth / delayed right-hand sides
  std::vector<RegionDef> regions;  // switched
  double tau = 0.0;
  std::vector<ExprDef> history;    // delayed, expressions in t

  ExprDef stage;
  ExprDef terminal;

  SolverSettings solver;

  long steps() const;
  void validate() const;
};

/// Parses and fully validates the sectioned key/value problem format.
ProblemSpec parse_problem_text(const std::string& text, const std::string& origin = "<string>");
ProblemSpec parse_problem_file(const std::string& path);

/// Renders a spec back to the file format; re-parsing the output yields an
/// equivalent problem.
std::string serialize_problem(const ProblemSpec& spec);

/// Bundled benchmark problems: ex1 (smooth first-order system), ex2
/// (four-region switched system), ex3 (constant state delay).
ProblemSpec builtin(const std::string& name);
std::vector<std::string> builtin_names();

// Lowering to the runtime callables used by the simulator and optimizer.
dynamics::SmoothFieldFn make_smooth_field(const ProblemSpec& spec);
dynamics::RegionSpec make_region_spec(const ProblemSpec& spec);
dynamics::DelayedFieldFn make_delayed_field(const ProblemSpec& spec);
dynamics::DelaySpec make_delay_spec(const ProblemSpec& spec);
cost::CostSpec make_cost_spec(const ProblemSpec& spec);
optimizer::ControlProblem make_control_problem(const ProblemSpec& spec);

/// Solve configuration assembled from the spec's solver settings.
optimizer::SolveConfig make_solve_config(const ProblemSpec& spec);

}  // namespace bfopt::problem
