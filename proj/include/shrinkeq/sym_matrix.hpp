#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

#include "shrinkeq/errors.hpp"

namespace shrinkeq {

// Symmetric matrix value type. Construction accepts any square matrix whose
// asymmetry max|M - M'| stays within `sym_tol` and stores the symmetrized part
// (M + M')/2, so downstream solvers can rely on exact symmetry. The default
// constructed object is empty (dim 0); operations that need a matrix reject it.
template <typename Scalar = double>
class SymMatrix {
 public:
  using MatrixType = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using VectorType = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  SymMatrix() = default;

  template <typename Derived>
  explicit SymMatrix(const Eigen::MatrixBase<Derived>& m, Scalar sym_tol = default_sym_tol()) {
    if (m.rows() != m.cols()) {
      throw std::invalid_argument("SymMatrix: need a square matrix, got " +
                                  std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    }
    MatrixType dense = m;
    const Scalar asym = (dense - dense.transpose()).cwiseAbs().maxCoeff();
    if (!(asym <= sym_tol)) {
      throw std::invalid_argument("SymMatrix: asymmetry " + std::to_string(asym) +
                                  " exceeds tolerance " + std::to_string(sym_tol));
    }
    mat_ = ((dense + dense.transpose()) / Scalar(2)).eval();
  }

  static constexpr Scalar default_sym_tol() { return Scalar(1e-12); }

  static SymMatrix identity(Eigen::Index p) { return SymMatrix(MatrixType::Identity(p, p)); }

  static SymMatrix zero(Eigen::Index p) { return SymMatrix(MatrixType::Zero(p, p)); }

  static SymMatrix diagonal(const VectorType& d) {
    return SymMatrix(MatrixType(d.asDiagonal()));
  }

  static SymMatrix scaled_identity(Eigen::Index p, Scalar s) {
    return SymMatrix(MatrixType(s * MatrixType::Identity(p, p)));
  }

  Eigen::Index dim() const { return mat_.rows(); }
  bool empty() const { return mat_.rows() == 0; }
  const MatrixType& mat() const { return mat_; }
  Scalar operator()(Eigen::Index i, Eigen::Index j) const { return mat_(i, j); }

 private:
  MatrixType mat_;
};

using SymMatrixXd = SymMatrix<double>;

namespace detail {

template <typename Scalar>
void require_nonempty(const SymMatrix<Scalar>& m, const char* who) {
  if (m.empty()) throw std::invalid_argument(std::string(who) + ": empty matrix");
}

}  // namespace detail

// Smallest eigenvalue, computed by a full symmetric eigendecomposition.
template <typename Scalar>
Scalar min_eigenvalue(const SymMatrix<Scalar>& m) {
  detail::require_nonempty(m, "min_eigenvalue");
  Eigen::SelfAdjointEigenSolver<typename SymMatrix<Scalar>::MatrixType> es(
      m.mat(), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw numerical_error("min_eigenvalue: eigendecomposition failed");
  }
  return es.eigenvalues()(0);
}

// True when the smallest eigenvalue is >= -tol.
template <typename Scalar>
bool check_psd(const SymMatrix<Scalar>& m, Scalar tol) {
  if (!(tol >= Scalar(0))) {
    throw std::invalid_argument("check_psd: tolerance must be nonnegative");
  }
  return min_eigenvalue(m) >= -tol;
}

// Spectral norm: largest eigenvalue magnitude.
template <typename Scalar>
Scalar operator_norm(const SymMatrix<Scalar>& m) {
  detail::require_nonempty(m, "operator_norm");
  Eigen::SelfAdjointEigenSolver<typename SymMatrix<Scalar>::MatrixType> es(
      m.mat(), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw numerical_error("operator_norm: eigendecomposition failed");
  }
  const auto& ev = es.eigenvalues();
  using std::abs;
  return std::max(abs(ev(0)), abs(ev(ev.size() - 1)));
}

// Loewner order test: a <= b iff b - a is PSD up to tol.
template <typename Scalar>
bool loewner_leq(const SymMatrix<Scalar>& a, const SymMatrix<Scalar>& b, Scalar tol) {
  if (a.dim() != b.dim()) {
    throw std::invalid_argument("loewner_leq: dimension mismatch, " + std::to_string(a.dim()) +
                                " vs " + std::to_string(b.dim()));
  }
  return check_psd(SymMatrix<Scalar>(b.mat() - a.mat(), std::numeric_limits<Scalar>::infinity()),
                   tol);
}

// Shrinkage target A together with the floor t that certifies A >= t * Id.
// Validated on construction so solvers can divide by t without further checks.
template <typename Scalar = double>
class ShrinkagePlan {
 public:
  using MatrixType = typename SymMatrix<Scalar>::MatrixType;

  ShrinkagePlan(SymMatrix<Scalar> a, Scalar t_floor) : a_(std::move(a)), t_floor_(t_floor) {
    detail::require_nonempty(a_, "ShrinkagePlan");
    if (!(t_floor_ > Scalar(0))) {
      throw std::invalid_argument("ShrinkagePlan: t_floor must be positive, got " +
                                  std::to_string(t_floor_));
    }
    min_eig_ = shrinkeq::min_eigenvalue(a_);
    if (!(min_eig_ >= t_floor_ - Scalar(1e-10))) {
      throw std::invalid_argument("ShrinkagePlan: min eigenvalue " + std::to_string(min_eig_) +
                                  " below t_floor " + std::to_string(t_floor_));
    }
  }

  const SymMatrix<Scalar>& A() const { return a_; }
  Scalar t_floor() const { return t_floor_; }
  Scalar min_eigenvalue() const { return min_eig_; }
  Eigen::Index dim() const { return a_.dim(); }

  // Plan for the scaled target t * A; the floor scales along.
  ShrinkagePlan scaled(Scalar t) const {
    if (!(t > Scalar(0))) {
      throw std::invalid_argument("ShrinkagePlan::scaled: scale must be positive");
    }
    return ShrinkagePlan(SymMatrix<Scalar>(t * a_.mat()), t * t_floor_);
  }

 private:
  SymMatrix<Scalar> a_;
  Scalar t_floor_;
  Scalar min_eig_;
};

using ShrinkagePlanXd = ShrinkagePlan<double>;

}  // namespace shrinkeq
