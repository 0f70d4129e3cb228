#pragma once

#include <Eigen/Dense>

namespace ddc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// (M + M^T) / 2.
MatrixXd symmetrize(const MatrixXd& m);

/// Smallest eigenvalue of the symmetric part of `m`.
double min_eig_sym(const MatrixXd& m);

double sigma_max(const MatrixXd& m);

/// F^{-1/2} for symmetric positive-definite F. Throws kFNotPositiveDefinite
/// when the smallest eigenvalue is not above `tol` times the largest.
MatrixXd inv_sqrt_spd(const MatrixXd& f, double tol = 1e-12);

/// Rank from singular values relative to the largest one.
int numerical_rank(const MatrixXd& m, double rel_tol);

/// Minimum-Frobenius-norm solution G of M G = rhs (least squares when
/// inconsistent).
MatrixXd min_norm_solve(const MatrixXd& m, const MatrixXd& rhs);

MatrixXd kron(const MatrixXd& a, const MatrixXd& b);

/// Real 2n x 2n embedding [[Re, -Im], [Im, Re]] of a complex matrix.
MatrixXd real_embedding(const Eigen::MatrixXcd& m);

}  // namespace ddc
