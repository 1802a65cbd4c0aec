#include "bfopt/estimator.hpp"

#include <Eigen/QR>
#include <cmath>

#include "bfopt/errors.hpp"
#include "bfopt/rng.hpp"

namespace bfopt::estimator {

EstimatorKind estimator_kind_from_string(const std::string& name) {
  if (name == "ls") return EstimatorKind::RandomizedLeastSquares;
  if (name == "central") return EstimatorKind::CoordinateCentral;
  throw SpecError("unknown estimator '" + name + "' (expected ls or central)");
}

std::string to_string(EstimatorKind kind) {
  return kind == EstimatorKind::RandomizedLeastSquares ? "ls" : "central";
}

void PerturbationScheme::validate() const {
  if (!(epsilon > 0.0)) throw SpecError("perturbation epsilon must be > 0");
  if (samples < 0) throw SpecError("sample count must be >= 0");
}

namespace {

VectorXd coordinate_central(const ObjectiveFn& objective, const VectorXd& theta,
                            double eps) {
  const Eigen::Index p = theta.size();
  VectorXd g(p), probe = theta;
  for (Eigen::Index i = 0; i < p; ++i) {
    probe[i] = theta[i] + eps;
    const double plus = objective(probe);
    probe[i] = theta[i] - eps;
    const double minus = objective(probe);
    probe[i] = theta[i];
    if (!std::isfinite(plus) || !std::isfinite(minus))
      throw EstimationError("central difference hit a non-finite objective value");
    g[i] = (plus - minus) / (2.0 * eps);
  }
  return g;
}

// Fills one Rademacher perturbation row from its own deterministic stream.
void rademacher_row(std::uint64_t seed, std::uint64_t iteration, std::uint64_t sample,
                    double eps, VectorXd& row) {
  SplitMix64 gen(derive_seed(derive_seed(seed, seed_tag::kPerturbation, iteration), sample));
  for (Eigen::Index j = 0; j < row.size(); ++j) row[j] = gen.next_sign() ? eps : -eps;
}

VectorXd randomized_least_squares(const ObjectiveFn& objective, const VectorXd& theta,
                                  const PerturbationScheme& scheme,
                                  std::uint64_t iteration, double base) {
  const Eigen::Index p = theta.size();
  const int k_requested = scheme.samples > 0 ? scheme.samples : static_cast<int>(2 * p);
  if (k_requested < p)
    throw SpecError("least-squares estimator needs at least p = " + std::to_string(p) +
                    " samples, got " + std::to_string(k_requested));

  MatrixXd rows(k_requested, p);
  VectorXd rhs(k_requested), delta(p);
  for (int attempt = 0; attempt < 2; ++attempt) {
    Eigen::Index kept = 0;
    for (int k = 0; k < k_requested; ++k) {
      // The second attempt draws from a disjoint sample range.
      const std::uint64_t sample = static_cast<std::uint64_t>(k) +
                                   static_cast<std::uint64_t>(attempt) * k_requested;
      rademacher_row(scheme.seed, iteration, sample, scheme.epsilon, delta);
      const double value = objective(theta + delta);
      if (!std::isfinite(value)) continue;  // diverged sample, drop the row
      rows.row(kept) = delta;
      rhs[kept] = value - base;
      ++kept;
    }
    if (kept < p) continue;

    const MatrixXd d = rows.topRows(kept);
    const MatrixXd normal = d.transpose() * d;
    Eigen::ColPivHouseholderQR<MatrixXd> qr(normal);
    if (qr.rank() < p) continue;
    return qr.solve(d.transpose() * rhs.head(kept));
  }
  throw EstimationError("gradient estimation failed after resampling (diverged samples "
                        "or rank-deficient perturbations)");
}

}  // namespace

VectorXd estimate_gradient(const ObjectiveFn& objective, const VectorXd& theta,
                           const PerturbationScheme& scheme, std::uint64_t iteration,
                           std::optional<double> base) {
  scheme.validate();
  if (!objective) throw SpecError("estimate_gradient requires an objective");
  if (theta.size() == 0) throw SpecError("estimate_gradient requires parameters");
  if (base && !std::isfinite(*base))
    throw BasePointError("objective is non-finite at the expansion point");

  if (scheme.kind == EstimatorKind::CoordinateCentral)
    return coordinate_central(objective, theta, scheme.epsilon);

  double base_value;
  if (base) {
    base_value = *base;
  } else {
    base_value = objective(theta);
    if (!std::isfinite(base_value))
      throw BasePointError("objective is non-finite at the expansion point");
  }
  return randomized_least_squares(objective, theta, scheme, iteration, base_value);
}

VectorXd flatten(const MatrixXd& theta) {
  return Eigen::Map<const VectorXd>(theta.data(), theta.size());
}

VectorXd flatten(const MatrixXd& theta, const VectorXd& mu) {
  VectorXd flat(theta.size() + mu.size());
  flat.head(theta.size()) = Eigen::Map<const VectorXd>(theta.data(), theta.size());
  flat.tail(mu.size()) = mu;
  return flat;
}

MatrixXd unflatten(const VectorXd& flat, long rows, long cols) {
  if (flat.size() != rows * cols)
    throw SpecError("unflatten size mismatch: vector of length " +
                    std::to_string(flat.size()) + " cannot fill a " + std::to_string(rows) +
                    "x" + std::to_string(cols) + " matrix");
  return Eigen::Map<const MatrixXd>(flat.data(), rows, cols);
}

}  // namespace bfopt::estimator
