#pragma once

#include <algorithm>

#include <Eigen/Dense>

#include "chronosync/error.hpp"

namespace chronosync::linalg {

inline double lambda_max(const Eigen::MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym, Eigen::EigenvaluesOnly);
  return eig.eigenvalues()(sym.rows() - 1);
}

inline double lambda_min(const Eigen::MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym, Eigen::EigenvaluesOnly);
  return eig.eigenvalues()(0);
}

/// Spectral norm of a symmetric matrix.
inline double sym_norm(const Eigen::MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

inline Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

/**
 * Solves A^T X + X A = -Q for symmetric X through the Kronecker form
 * (I kron A^T + A^T kron I) vec(X) = -vec(Q). Meant for the small blocks
 * used here (dimension <= ~40); A must be Hurwitz for a positive definite X.
 */
inline Eigen::MatrixXd lyapunov_solve(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q) {
  const Eigen::Index n = A.rows();
  require(A.cols() == n && Q.rows() == n && Q.cols() == n, ErrorKind::DimensionMismatch,
          "lyapunov_solve needs square matrices of equal size");
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd At = A.transpose();
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n * n, n * n);
  for (Eigen::Index c = 0; c < n; ++c) {
    for (Eigen::Index r = 0; r < n; ++r) {
      // Block (r, c) of I kron A^T + A^T kron I.
      Eigen::MatrixXd block = At(r, c) * I;
      if (r == c) block += At;
      K.block(r * n, c * n, n, n) = block;
    }
  }
  const Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(Q.data(), n * n);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
  require(lu.isInvertible(), ErrorKind::InvalidArgument, "Lyapunov operator is singular");
  const Eigen::VectorXd x = lu.solve(rhs);
  return symmetrize(Eigen::Map<const Eigen::MatrixXd>(x.data(), n, n));
}

inline int numerical_rank(const Eigen::MatrixXd& m, double rel_tol = 1e-8) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  return static_cast<int>((s.array() > rel_tol * s(0)).count());
}

/// Orthonormal basis of the orthogonal complement of range(m), i.e. ker(m^T).
inline Eigen::MatrixXd range_complement(const Eigen::MatrixXd& m, double rel_tol = 1e-8) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullU);
  const auto& s = svd.singularValues();
  const int rank = s.size() == 0 || s(0) == 0.0 ? 0 : static_cast<int>((s.array() > rel_tol * s(0)).count());
  return svd.matrixU().rightCols(m.rows() - rank);
}

}  // namespace chronosync::linalg
