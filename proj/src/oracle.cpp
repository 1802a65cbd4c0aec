#include "bfopt/oracle.hpp"

#include <cmath>

#include "bfopt/errors.hpp"

namespace bfopt::oracle {

VectorXd rk4_integrate(const std::function<VectorXd(const VectorXd&, double)>& f,
                       VectorXd x, double t0, double t1, long steps) {
  if (steps < 1) throw SpecError("rk4_integrate needs at least one step");
  const double h = (t1 - t0) / static_cast<double>(steps);
  for (long i = 0; i < steps; ++i) {
    const double t = t0 + i * h;
    const VectorXd k1 = f(x, t);
    const VectorXd k2 = f(x + 0.5 * h * k1, t + 0.5 * h);
    const VectorXd k3 = f(x + 0.5 * h * k2, t + 0.5 * h);
    const VectorXd k4 = f(x + h * k3, t + h);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return x;
}

namespace {

// Augmented state (x, lambda, J); Jdot = x^2 + u^2 with u = -lambda/2.
VectorXd ex1_field(const VectorXd& s, double) {
  VectorXd ds(3);
  const double x = s[0], lambda = s[1];
  ds[0] = x - 0.5 * lambda;
  ds[1] = -2.0 * x - lambda;
  ds[2] = x * x + 0.25 * lambda * lambda;
  return ds;
}

VectorXd ex1_shoot(double lambda0, long steps) {
  VectorXd s0(3);
  s0 << 2.0, lambda0, 0.0;
  return rk4_integrate(ex1_field, s0, 0.0, 1.0, steps);
}

}  // namespace

Ex1Solution ex1_optimal(double dt) {
  if (!(dt > 0.0) || dt > 1e-4)
    throw SpecError("oracle integration step must be in (0, 1e-4]");
  const long steps = std::lround(1.0 / dt);

  // x(1) is affine in lambda(0) for this linear system, so two probes give
  // the exact shooting value; a few secant corrections absorb round-off.
  double l0 = 0.0, l1 = 1.0;
  double f0 = ex1_shoot(l0, steps)[0] - 4.0;
  double f1 = ex1_shoot(l1, steps)[0] - 4.0;
  for (int iter = 0; iter < 8 && std::abs(f1) > 1e-13; ++iter) {
    if (f1 == f0) throw SpecError("shooting failed to bracket the terminal condition");
    const double next = l1 - f1 * (l1 - l0) / (f1 - f0);
    l0 = l1;
    f0 = f1;
    l1 = next;
    f1 = ex1_shoot(l1, steps)[0] - 4.0;
  }

  const VectorXd final_state = ex1_shoot(l1, steps);
  Ex1Solution out;
  out.cost = final_state[2];
  out.terminal = final_state[0];
  out.costate0 = l1;
  return out;
}

double finite_check(const std::function<double(const VectorXd&)>& f, const VectorXd& x,
                    const VectorXd& analytic_grad, double eps) {
  if (analytic_grad.size() != x.size())
    throw SpecError("finite_check gradient dimension mismatch");
  double worst = 0.0;
  VectorXd probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + eps;
    const double plus = f(probe);
    probe[i] = x[i] - eps;
    const double minus = f(probe);
    probe[i] = x[i];
    const double numeric = (plus - minus) / (2.0 * eps);
    const double scale = std::max(1.0, std::abs(analytic_grad[i]));
    worst = std::max(worst, std::abs(numeric - analytic_grad[i]) / scale);
  }
  return worst;
}

}  // namespace bfopt::oracle
