#include "ddc/linalg.hpp"

#include <cmath>

#include "ddc/error.hpp"

namespace ddc {

MatrixXd symmetrize(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

double min_eig_sym(const MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(m),
                                             Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double sigma_max(const MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<MatrixXd> svd(m);
  return svd.singularValues()(0);
}

MatrixXd inv_sqrt_spd(const MatrixXd& f, double tol) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(f));
  if (es.info() != Eigen::Success) {
    throw Error(ErrorCode::kEigenFailure, "symmetric eigensolver failed");
  }
  const VectorXd& w = es.eigenvalues();
  const double top = std::max(w.maxCoeff(), 0.0);
  if (w.minCoeff() <= tol * std::max(top, 1.0)) {
    throw Error(ErrorCode::kFNotPositiveDefinite,
                "matrix is not positive definite (min eigenvalue " +
                    std::to_string(w.minCoeff()) + ")");
  }
  return es.eigenvectors() * w.cwiseSqrt().cwiseInverse().asDiagonal() *
         es.eigenvectors().transpose();
}

int numerical_rank(const MatrixXd& m, double rel_tol) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<MatrixXd> svd(m);
  const VectorXd& s = svd.singularValues();
  if (s(0) <= 0.0) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > rel_tol * s(0)) ++r;
  }
  return r;
}

MatrixXd min_norm_solve(const MatrixXd& m, const MatrixXd& rhs) {
  Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(m);
  return cod.solve(rhs);
}

MatrixXd kron(const MatrixXd& a, const MatrixXd& b) {
  MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

MatrixXd real_embedding(const Eigen::MatrixXcd& m) {
  const Eigen::Index r = m.rows(), c = m.cols();
  MatrixXd out(2 * r, 2 * c);
  out.topLeftCorner(r, c) = m.real();
  out.topRightCorner(r, c) = -m.imag();
  out.bottomLeftCorner(r, c) = m.imag();
  out.bottomRightCorner(r, c) = m.real();
  return out;
}

}  // namespace ddc
