#include "shrinkeq/ridge.hpp"

#include <stdexcept>
#include <string>

#include "shrinkeq/errors.hpp"
#include "shrinkeq/regularized_inverse.hpp"

namespace shrinkeq {

RidgeProblem::RidgeProblem(Eigen::MatrixXd x, SymMatrixXd gamma, double lambda,
                           Eigen::VectorXd beta0, SymMatrixXd sigma_eps)
    : x_(std::move(x)),
      gamma_(std::move(gamma)),
      lambda_(lambda),
      beta0_(std::move(beta0)),
      sigma_eps_(std::move(sigma_eps)) {
  const Eigen::Index n = x_.rows();
  const Eigen::Index p = x_.cols();
  if (n < 1 || p < 1) throw std::invalid_argument("RidgeProblem: empty design");
  if (gamma_.dim() != p || beta0_.size() != p) {
    throw std::invalid_argument("RidgeProblem: penalty or coefficient dimension mismatch");
  }
  if (sigma_eps_.dim() != n) {
    throw std::invalid_argument("RidgeProblem: Sigma_eps dimension " +
                                std::to_string(sigma_eps_.dim()) + " vs n " + std::to_string(n));
  }
  if (!(lambda_ > 0.0)) {
    throw std::invalid_argument("RidgeProblem: lambda must be positive, got " +
                                std::to_string(lambda_));
  }
  if (!check_psd(gamma_, 1e-8)) {
    throw std::invalid_argument("RidgeProblem: penalty matrix not PSD");
  }
}

RidgeRisk ridge_risk(const RidgeProblem& prob) {
  const double n = static_cast<double>(prob.n());
  const Eigen::MatrixXd& x = prob.X();
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(prob.p(), prob.p());
  k.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose(), 1.0 / n);
  k = k.selfadjointView<Eigen::Lower>();
  k += prob.lambda() * prob.Gamma().mat();

  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success) {
    throw numerical_error("ridge_risk: regularized Gram X'X/n + lambda Gamma is singular");
  }

  RidgeRisk out;
  const Eigen::VectorXd gb = prob.Gamma().mat() * prob.beta0();
  out.bias2 = prob.lambda() * prob.lambda() * llt.solve(gb).squaredNorm();

  // variance = (1/n^2) tr(Sigma_eps X K^-2 X') = (1/n^2) sum (Z' .* (Sigma_eps Z'))
  // with Z = K^-1 X'.
  const Eigen::MatrixXd z = llt.solve(x.transpose());
  const Eigen::MatrixXd zt = z.transpose();
  out.variance = zt.cwiseProduct(prob.sigma_eps().mat() * zt).sum() / (n * n);
  out.total = out.bias2 + out.variance;

  const Eigen::Index nn = prob.sigma_eps().dim();
  if ((prob.sigma_eps().mat() - Eigen::MatrixXd::Identity(nn, nn)).cwiseAbs().maxCoeff() <=
      1e-14) {
    const Eigen::MatrixXd k_inv = llt.solve(Eigen::MatrixXd::Identity(prob.p(), prob.p()));
    out.trace_identity =
        (k_inv.trace() - prob.lambda() * (prob.Gamma().mat() * k_inv * k_inv).trace()) / n;
  }
  return out;
}

}  // namespace shrinkeq
