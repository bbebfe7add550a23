#pragma once

#include <Eigen/Dense>

#include "shrinkeq/det_equiv.hpp"
#include "shrinkeq/sym_matrix.hpp"

namespace shrinkeq {

// Linearly constrained minimum-risk problem: minimize w'Sigma w subject to
// V'w = U, with the covariance replaced by its shrunken estimate downstream.
// V must have full column rank and at most 10 columns.
class PortfolioProblem {
 public:
  PortfolioProblem(Eigen::MatrixXd v, Eigen::VectorXd u, SymMatrixXd sigma, ShrinkagePlanXd plan);

  const Eigen::MatrixXd& V() const { return v_; }
  const Eigen::VectorXd& U() const { return u_; }
  const SymMatrixXd& Sigma() const { return sigma_; }
  const ShrinkagePlanXd& plan() const { return plan_; }
  Eigen::Index p() const { return v_.rows(); }
  Eigen::Index k() const { return v_.cols(); }

 private:
  Eigen::MatrixXd v_;
  Eigen::VectorXd u_;
  SymMatrixXd sigma_;
  ShrinkagePlanXd plan_;
};

struct PortfolioRisks {
  // U'(V'(gamma Sigma + A)^-1 V)^-1 U: what the plug-in objective reports.
  double w_hat_risk_naive = 0.0;
  // (1 + xi) U' Mtilde^-1 (V' Mbar^-1 Sigma Mbar^-1 V) Mtilde^-1 U with
  // Mbar = gamma Sigma + A: risk the estimated weights actually carry under
  // the population covariance.
  double w_hat_risk_realized = 0.0;
  // U'(V'Sigma^-1 V)^-1 U: the population optimum.
  double w_opt_risk = 0.0;
};

// xi_sigma must be the sandwich coefficient for B = Sigma from solve_xi.
PortfolioRisks portfolio_risks(const PortfolioProblem& prob, const DetEquivSolution& sol,
                               double xi_sigma);

}  // namespace shrinkeq
