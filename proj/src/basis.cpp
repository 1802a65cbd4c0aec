#include "bfopt/basis.hpp"

#include <cmath>

#include "bfopt/errors.hpp"

namespace bfopt::basis {

BasisKind basis_kind_from_string(const std::string& name) {
  if (name == "chebyshev") return BasisKind::Chebyshev;
  if (name == "legendre") return BasisKind::Legendre;
  if (name == "fourier") return BasisKind::Fourier;
  throw SpecError("unknown basis '" + name + "' (expected chebyshev, legendre or fourier)");
}

std::string to_string(BasisKind kind) {
  switch (kind) {
    case BasisKind::Chebyshev: return "chebyshev";
    case BasisKind::Legendre: return "legendre";
    case BasisKind::Fourier: return "fourier";
  }
  return "?";
}

void BasisSet::validate() const {
  if (m < 1) throw SpecError("basis size m must be >= 1");
  if (!(tf > 0.0)) throw SpecError("basis horizon tf must be > 0");
}

Eigen::VectorXd eval_basis(const BasisSet& basis, double t) {
  basis.validate();
  // Tolerate end-point round-off from t = N*dt grids.
  const double slack = 1e-12 * basis.tf;
  if (t < -slack || t > basis.tf + slack)
    throw DomainError("basis evaluation time outside [0, tf]");

  Eigen::VectorXd phi(basis.m);
  if (basis.kind == BasisKind::Fourier) {
    const double w = 2.0 * M_PI / basis.tf;
    phi[0] = 1.0;
    for (int i = 1; i < basis.m; ++i) {
      const int k = (i + 1) / 2;
      phi[i] = (i % 2 == 1) ? std::sin(k * w * t) : std::cos(k * w * t);
    }
    return phi;
  }

  double s = 2.0 * t / basis.tf - 1.0;
  s = std::min(1.0, std::max(-1.0, s));
  phi[0] = 1.0;
  if (basis.m > 1) phi[1] = s;
  if (basis.kind == BasisKind::Chebyshev) {
    for (int k = 2; k < basis.m; ++k) phi[k] = 2.0 * s * phi[k - 1] - phi[k - 2];
  } else {
    // (k+1) P_{k+1} = (2k+1) s P_k - k P_{k-1}
    for (int k = 2; k < basis.m; ++k)
      phi[k] = ((2.0 * k - 1.0) * s * phi[k - 1] - (k - 1.0) * phi[k - 2]) / k;
  }
  return phi;
}

Eigen::MatrixXd basis_matrix(const BasisSet& basis, const Eigen::VectorXd& grid) {
  Eigen::MatrixXd rows(grid.size(), basis.m);
  for (Eigen::Index j = 0; j < grid.size(); ++j) rows.row(j) = eval_basis(basis, grid[j]);
  return rows;
}

Eigen::MatrixXd control_signal(const Eigen::MatrixXd& theta,
                               const Eigen::MatrixXd& basis_rows) {
  if (basis_rows.cols() != theta.rows())
    throw SpecError("control_signal shape mismatch: basis rows have " +
                    std::to_string(basis_rows.cols()) + " columns but theta has " +
                    std::to_string(theta.rows()) + " rows");
  return basis_rows * theta;
}

}  // namespace bfopt::basis
