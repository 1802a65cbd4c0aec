#pragma once

#include <Eigen/Core>
#include <functional>

namespace bfopt::oracle {

using Eigen::VectorXd;

struct Ex1Solution {
  double cost = 0.0;      // J* of the two-point boundary value problem
  double terminal = 0.0;  // x(1), should meet the target 4 to solver accuracy
  double costate0 = 0.0;  // shooting variable lambda(0)
};

/// Reference solution of the first benchmark problem via indirect shooting:
/// the state/costate system  xdot = x - lambda/2, lambdadot = -2x - lambda
/// (stationarity gives u = -lambda/2) is integrated with a classical
/// fourth-order Runge-Kutta scheme and lambda(0) is adjusted until x(1) = 4.
/// The running cost is integrated as an extra state, so the returned J* has
/// integrator-level accuracy. Entirely independent of the rollout code paths.
Ex1Solution ex1_optimal(double dt = 1e-4);

/// Fourth-order fixed-step integration of dx/dt = f(x, t) from t0 to t1.
VectorXd rk4_integrate(const std::function<VectorXd(const VectorXd&, double)>& f,
                       VectorXd x0, double t0, double t1, long steps);

/// Componentwise maximum relative error between a central-difference gradient
/// of f at x and the supplied analytic gradient.
double finite_check(const std::function<double(const VectorXd&)>& f, const VectorXd& x,
                    const VectorXd& analytic_grad, double eps);

}  // namespace bfopt::oracle
