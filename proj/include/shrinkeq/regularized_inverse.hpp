#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

#include "shrinkeq/errors.hpp"
#include "shrinkeq/sym_matrix.hpp"

namespace shrinkeq {

// Factor-once solver for a symmetric positive definite matrix. Tries Cholesky
// first and falls back to an eigendecomposition when the Cholesky breaks down
// near the definiteness boundary; a nonpositive spectrum is a hard failure.
template <typename Scalar = double>
class SymSolver {
 public:
  using MatrixType = typename SymMatrix<Scalar>::MatrixType;
  using VectorType = typename SymMatrix<Scalar>::VectorType;

  explicit SymSolver(const MatrixType& m) { init(m); }
  explicit SymSolver(const SymMatrix<Scalar>& m) { init(m.mat()); }

  Eigen::Index dim() const { return dim_; }
  bool used_cholesky() const { return used_cholesky_; }

  template <typename Rhs>
  auto solve(const Rhs& rhs) const {
    using Result = Eigen::Matrix<Scalar, Eigen::Dynamic, Rhs::ColsAtCompileTime>;
    if (used_cholesky_) return Result(llt_.solve(rhs));
    return Result(eivec_ * (eival_.cwiseInverse().asDiagonal() * (eivec_.transpose() * rhs)));
  }

  MatrixType inverse() const {
    MatrixType inv = solve(MatrixType::Identity(dim_, dim_));
    return ((inv + inv.transpose()) / Scalar(2)).eval();
  }

 private:
  void init(const MatrixType& m) {
    if (m.rows() != m.cols() || m.rows() == 0) {
      throw std::invalid_argument("SymSolver: need a nonempty square matrix");
    }
    dim_ = m.rows();
    llt_.compute(m);
    if (llt_.info() == Eigen::Success) {
      used_cholesky_ = true;
      return;
    }
    Eigen::SelfAdjointEigenSolver<MatrixType> es(m);
    if (es.info() != Eigen::Success) {
      throw numerical_error("SymSolver: eigendecomposition failed after Cholesky breakdown");
    }
    if (!(es.eigenvalues()(0) > Scalar(0))) {
      throw numerical_error("SymSolver: matrix not positive definite, min eigenvalue " +
                            std::to_string(es.eigenvalues()(0)));
    }
    eival_ = es.eigenvalues();
    eivec_ = es.eigenvectors();
    used_cholesky_ = false;
  }

  Eigen::Index dim_ = 0;
  bool used_cholesky_ = false;
  Eigen::LLT<MatrixType> llt_;
  VectorType eival_;
  MatrixType eivec_;
};

// Inverse of the shrunken matrix S + A. Cholesky is used opportunistically;
// the eigendecomposition fallback covers borderline conditioning. The result
// is certified by the reconstruction residual ||(S+A)*inv - Id||_op.
template <typename Scalar>
SymMatrix<Scalar> regularized_inverse(const SymMatrix<Scalar>& s, const ShrinkagePlan<Scalar>& plan,
                                      Scalar residual_tol = Scalar(1e-8)) {
  using MatrixType = typename SymMatrix<Scalar>::MatrixType;
  if (s.dim() != plan.dim()) {
    throw std::invalid_argument("regularized_inverse: dimension mismatch, S is " +
                                std::to_string(s.dim()) + ", plan is " +
                                std::to_string(plan.dim()));
  }
  const MatrixType m = s.mat() + plan.A().mat();
  MatrixType inv;
  Eigen::LLT<MatrixType> llt(m);
  if (llt.info() == Eigen::Success) {
    inv = llt.solve(MatrixType::Identity(m.rows(), m.cols()));
  } else {
    Eigen::SelfAdjointEigenSolver<MatrixType> es(m);
    if (es.info() != Eigen::Success) {
      throw numerical_error("regularized_inverse: eigendecomposition failed");
    }
    const Scalar min_eig = es.eigenvalues()(0);
    if (!(min_eig > Scalar(0))) {
      throw numerical_error("regularized_inverse: shrunken matrix not positive definite, "
                            "min eigenvalue " + std::to_string(min_eig));
    }
    inv = es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() *
          es.eigenvectors().transpose();
  }
  inv = ((inv + inv.transpose()) / Scalar(2)).eval();

  const MatrixType defect = m * inv - MatrixType::Identity(m.rows(), m.cols());
  Eigen::SelfAdjointEigenSolver<MatrixType> res_es(defect.transpose() * defect,
                                                   Eigen::EigenvaluesOnly);
  using std::sqrt;
  const Scalar residual = sqrt(std::max(Scalar(0), res_es.eigenvalues().maxCoeff()));
  if (!(residual <= residual_tol)) {
    Eigen::SelfAdjointEigenSolver<MatrixType> m_es(m, Eigen::EigenvaluesOnly);
    throw numerical_error("regularized_inverse: reconstruction residual " +
                          std::to_string(residual) + " exceeds " + std::to_string(residual_tol) +
                          ", min eigenvalue of S+A is " + std::to_string(m_es.eigenvalues()(0)));
  }
  return SymMatrix<Scalar>(inv);
}

// Given M_inv = M^-1, returns (M + c*u*u')^-1 by the Sherman-Morrison identity.
// The denominator 1 + c*u'M^-1 u must stay away from zero.
template <typename Scalar>
SymMatrix<Scalar> rank1_downdate(const SymMatrix<Scalar>& m_inv,
                                 const typename SymMatrix<Scalar>::VectorType& u, Scalar c) {
  using VectorType = typename SymMatrix<Scalar>::VectorType;
  detail::require_nonempty(m_inv, "rank1_downdate");
  if (u.size() != m_inv.dim()) {
    throw std::invalid_argument("rank1_downdate: vector length " + std::to_string(u.size()) +
                                " does not match dimension " + std::to_string(m_inv.dim()));
  }
  const VectorType v = m_inv.mat() * u;
  const Scalar denom = Scalar(1) + c * u.dot(v);
  if (std::abs(denom) < Scalar(1e-12)) {
    throw singularity_error("rank1_downdate: denominator " + std::to_string(denom) +
                            " within 1e-12 of zero");
  }
  return SymMatrix<Scalar>(m_inv.mat() - (c / denom) * (v * v.transpose()));
}

}  // namespace shrinkeq
