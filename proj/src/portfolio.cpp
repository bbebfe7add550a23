#include "shrinkeq/portfolio.hpp"

#include <stdexcept>
#include <string>

#include "shrinkeq/errors.hpp"
#include "shrinkeq/regularized_inverse.hpp"

namespace shrinkeq {

PortfolioProblem::PortfolioProblem(Eigen::MatrixXd v, Eigen::VectorXd u, SymMatrixXd sigma,
                                   ShrinkagePlanXd plan)
    : v_(std::move(v)), u_(std::move(u)), sigma_(std::move(sigma)), plan_(std::move(plan)) {
  const Eigen::Index p = v_.rows();
  const Eigen::Index k = v_.cols();
  if (p < 1 || k < 1) throw std::invalid_argument("PortfolioProblem: empty constraint matrix");
  if (k > 10) {
    throw std::invalid_argument("PortfolioProblem: need k <= 10 constraints, got " +
                                std::to_string(k));
  }
  if (u_.size() != k) {
    throw std::invalid_argument("PortfolioProblem: U length " + std::to_string(u_.size()) +
                                " vs k " + std::to_string(k));
  }
  if (sigma_.dim() != p || plan_.dim() != p) {
    throw std::invalid_argument("PortfolioProblem: dimension mismatch");
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(v_);
  if (qr.rank() < k) {
    throw std::invalid_argument("PortfolioProblem: V rank " + std::to_string(qr.rank()) +
                                " below column count " + std::to_string(k));
  }
}

PortfolioRisks portfolio_risks(const PortfolioProblem& prob, const DetEquivSolution& sol,
                               double xi_sigma) {
  const Eigen::MatrixXd& v = prob.V();

  const SymSolver<double> shrunk(
      Eigen::MatrixXd(sol.gamma_bar * prob.Sigma().mat() + prob.plan().A().mat()));
  const Eigen::MatrixXd mtilde = v.transpose() * shrunk.solve(v);

  Eigen::LLT<Eigen::MatrixXd> mtilde_llt(mtilde);
  if (mtilde_llt.info() != Eigen::Success) {
    throw numerical_error("portfolio_risks: constraint Gram through the shrunken resolvent "
                          "is singular");
  }
  const Eigen::VectorXd y = mtilde_llt.solve(prob.U());

  PortfolioRisks out;
  out.w_hat_risk_naive = prob.U().dot(y);
  // Risk carried by the feasible allocation Mbar^-1 V Mtilde^-1 U: the inner
  // Gram runs Sigma through Mbar^-1 on both sides, which is also what makes
  // realized >= optimum an exact feasibility statement.
  const Eigen::MatrixXd vm = shrunk.solve(v);
  const Eigen::MatrixXd m_sandwich = vm.transpose() * prob.Sigma().mat() * vm;
  out.w_hat_risk_realized = (1.0 + xi_sigma) * y.dot(m_sandwich * y);

  Eigen::LLT<Eigen::MatrixXd> sigma_llt(prob.Sigma().mat());
  if (sigma_llt.info() != Eigen::Success) {
    throw numerical_error("portfolio_risks: Sigma is singular, no population optimum");
  }
  const Eigen::MatrixXd opt_gram = v.transpose() * sigma_llt.solve(v);
  Eigen::LLT<Eigen::MatrixXd> opt_llt(opt_gram);
  if (opt_llt.info() != Eigen::Success) {
    throw numerical_error("portfolio_risks: V'Sigma^-1 V is singular");
  }
  out.w_opt_risk = prob.U().dot(opt_llt.solve(prob.U()));
  return out;
}

}  // namespace shrinkeq
