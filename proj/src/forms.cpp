#include "shrinkeq/forms.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "shrinkeq/errors.hpp"
#include "shrinkeq/regularized_inverse.hpp"

namespace shrinkeq {

FormValues empirical_forms(const DesignSample& sample, const ShrinkagePlanXd& plan,
                           const Eigen::VectorXd& x, const Eigen::VectorXd& alpha,
                           const std::optional<SymMatrixXd>& sigma_eps) {
  const Eigen::Index n = sample.n;
  const Eigen::Index p = sample.p;
  if (plan.dim() != p) {
    throw std::invalid_argument("empirical_forms: plan dimension " + std::to_string(plan.dim()) +
                                " vs sample dimension " + std::to_string(p));
  }
  if (x.size() != p) {
    throw std::invalid_argument("empirical_forms: x length " + std::to_string(x.size()) +
                                " vs dimension " + std::to_string(p));
  }
  if (alpha.size() != n) {
    throw std::invalid_argument("empirical_forms: alpha length " + std::to_string(alpha.size()) +
                                " vs n " + std::to_string(n));
  }

  FormValues out;
  Eigen::VectorXd xn = x;
  const double x_norm = xn.norm();
  if (!(x_norm > 0.0)) throw std::invalid_argument("empirical_forms: x must be nonzero");
  if (std::abs(x_norm - 1.0) > 1e-12) {
    xn /= x_norm;
    out.renormalized_x = true;
  }
  Eigen::VectorXd an = alpha;
  const double a_norm = an.norm();
  if (!(a_norm > 0.0)) throw std::invalid_argument("empirical_forms: alpha must be nonzero");
  if (std::abs(a_norm - 1.0) > 1e-12) {
    an /= a_norm;
    out.renormalized_alpha = true;
  }

  const SymSolver<double> solver(Eigen::MatrixXd(sample.S.mat() + plan.A().mat()));
  const Eigen::VectorXd w =
      sample.X.transpose() * (sample.R.cwiseProduct(an)) / std::sqrt(static_cast<double>(n));
  const Eigen::VectorXd mx = solver.solve(xn);
  const Eigen::VectorXd mw = solver.solve(w);

  out.f = xn.dot(mx);
  out.g = w.dot(mw);
  out.h = w.dot(mx);

  if (sigma_eps) {
    if (sigma_eps->dim() != p) {
      throw std::invalid_argument("empirical_forms: Sigma_eps dimension " +
                                  std::to_string(sigma_eps->dim()) + " vs " + std::to_string(p));
    }
    if (!check_psd(*sigma_eps, 1e-10)) {
      throw std::invalid_argument("empirical_forms: Sigma_eps not PSD");
    }
    const Eigen::VectorXd ex = sigma_eps->mat() * mx;
    out.F = mx.dot(ex);
    out.G = mw.dot(sigma_eps->mat() * mw);
    out.H = mw.dot(ex);
  }

  const Eigen::VectorXd mu_hat = sample.X.transpose() * sample.R / static_cast<double>(n);
  const Eigen::VectorXd mmu = solver.solve(mu_hat);
  MuHatForms mu_forms;
  mu_forms.mu_m_mu = mu_hat.dot(mmu);
  mu_forms.x_m_mu = xn.dot(mmu);
  const double denom = 1.0 - mu_forms.mu_m_mu;
  if (std::abs(denom) < 1e-12) {
    throw singularity_error("empirical_forms: 1 - mu_hat'M^-1 mu_hat = " +
                            std::to_string(denom) + " within 1e-12 of zero");
  }
  mu_forms.shrunken_mu_form = mu_forms.mu_m_mu / denom;
  out.mu_forms = mu_forms;
  return out;
}

}  // namespace shrinkeq
