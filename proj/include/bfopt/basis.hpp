#pragma once

#include <Eigen/Core>
#include <string>

namespace bfopt::basis {

enum class BasisKind { Chebyshev, Legendre, Fourier };

BasisKind basis_kind_from_string(const std::string& name);
std::string to_string(BasisKind kind);

/// A family of m basis functions on the horizon [0, tf]. Polynomial kinds are
/// evaluated on the mapped coordinate s = 2 t / tf - 1; the Fourier family is
/// periodic on the horizon with fundamental frequency 2*pi/tf and is ordered
/// [1, sin wt, cos wt, sin 2wt, cos 2wt, ...] truncated at m.
struct BasisSet {
  BasisKind kind = BasisKind::Chebyshev;
  int m = 1;          // number of basis functions, >= 1
  double tf = 1.0;    // horizon end, > 0

  void validate() const;
};

/// Evaluates [phi_1(t), ..., phi_m(t)]. Throws DomainError if t is outside
/// [0, tf] (up to a relative tolerance absorbing grid round-off).
Eigen::VectorXd eval_basis(const BasisSet& basis, double t);

/// Stacks eval_basis over a time grid; row j is the basis row at grid[j].
/// Computed once per solve and reused across all rollouts.
Eigen::MatrixXd basis_matrix(const BasisSet& basis, const Eigen::VectorXd& grid);

/// Maps coefficients to the control signal: row j of the result is
/// basis_rows.row(j) * theta, one column per input channel.
Eigen::MatrixXd control_signal(const Eigen::MatrixXd& theta,
                               const Eigen::MatrixXd& basis_rows);

}  // namespace bfopt::basis
