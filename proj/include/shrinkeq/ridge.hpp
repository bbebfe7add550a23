#pragma once

#include <Eigen/Dense>

#include <optional>

#include "shrinkeq/sym_matrix.hpp"

namespace shrinkeq {

// Generalized ridge regression y = X beta0 / sqrt(n) + eps, penalized by
// lambda * beta'Gamma beta, with noise covariance Sigma_eps.
class RidgeProblem {
 public:
  RidgeProblem(Eigen::MatrixXd x, SymMatrixXd gamma, double lambda, Eigen::VectorXd beta0,
               SymMatrixXd sigma_eps);

  const Eigen::MatrixXd& X() const { return x_; }
  const SymMatrixXd& Gamma() const { return gamma_; }
  double lambda() const { return lambda_; }
  const Eigen::VectorXd& beta0() const { return beta0_; }
  const SymMatrixXd& sigma_eps() const { return sigma_eps_; }
  Eigen::Index n() const { return x_.rows(); }
  Eigen::Index p() const { return x_.cols(); }

 private:
  Eigen::MatrixXd x_;
  SymMatrixXd gamma_;
  double lambda_ = 0.0;
  Eigen::VectorXd beta0_;
  SymMatrixXd sigma_eps_;
};

// Conditional risk decomposition E[||beta_hat - beta0||^2 | X]:
//   bias2     lambda^2 beta0' Gamma K^-2 Gamma beta0
//   variance  (1/n) tr(K^-1 (X'Sigma_eps X / n) K^-1)
// with K = X'X/n + lambda Gamma. When Sigma_eps = Id the equivalent
// trace-difference form (tr K^-1 - lambda tr(Gamma K^-2))/n is reported too.
struct RidgeRisk {
  double bias2 = 0.0;
  double variance = 0.0;
  double total = 0.0;
  std::optional<double> trace_identity;
};

RidgeRisk ridge_risk(const RidgeProblem& prob);

}  // namespace shrinkeq
