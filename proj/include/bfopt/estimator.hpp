#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>

namespace bfopt::estimator {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class EstimatorKind {
  CoordinateCentral,       // central difference along each coordinate, 2p evaluations
  RandomizedLeastSquares,  // K random Rademacher perturbations, least-squares fit
};

EstimatorKind estimator_kind_from_string(const std::string& name);
std::string to_string(EstimatorKind kind);

struct PerturbationScheme {
  EstimatorKind kind = EstimatorKind::RandomizedLeastSquares;
  double epsilon = 0.01;    // perturbation magnitude, > 0
  int samples = 0;          // K for the least-squares scheme; 0 selects 2p
  std::uint64_t seed = 42;

  void validate() const;
};

using ObjectiveFn = std::function<double(const VectorXd&)>;

/// Estimates the gradient of `objective` at `theta`.
///
/// CoordinateCentral evaluates (J(theta + eps e_i) - J(theta - eps e_i)) / (2 eps)
/// per coordinate. RandomizedLeastSquares draws K rows with i.i.d. entries in
/// {-eps, +eps}, measures forward differences against the base value, and
/// solves the normal equations of the resulting linear system through a
/// rank-revealing orthogonal factorization. Rows whose evaluation came back
/// non-finite are dropped; if fewer than p usable rows remain the whole row
/// set is redrawn once before giving up.
///
/// `iteration` keys the perturbation stream so that repeated calls inside an
/// optimization loop draw fresh, reproducible directions. `base` supplies a
/// precomputed J(theta) and is required to be finite when given.
VectorXd estimate_gradient(const ObjectiveFn& objective, const VectorXd& theta,
                           const PerturbationScheme& scheme, std::uint64_t iteration = 0,
                           std::optional<double> base = std::nullopt);

/// Column-major flattening of a parameter matrix, multiplier entries last.
VectorXd flatten(const MatrixXd& theta);
VectorXd flatten(const MatrixXd& theta, const VectorXd& mu);
MatrixXd unflatten(const VectorXd& flat, long rows, long cols);

}  // namespace bfopt::estimator
