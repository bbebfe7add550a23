#include "shrinkeq/pooled_mean.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "shrinkeq/errors.hpp"
#include "shrinkeq/regularized_inverse.hpp"

namespace shrinkeq {

namespace {

double guarded(double denom, const char* what) {
  if (std::abs(denom) < 1e-12) {
    throw singularity_error(std::string("pooled_mean_forms: ") + what + " = " +
                            std::to_string(denom) + " within 1e-12 of zero");
  }
  return denom;
}

}  // namespace

PooledMeanForms pooled_mean_forms(const DesignSample& group1, const DesignSample& group2,
                                  const ShrinkagePlanXd& plan, const Eigen::VectorXd& mu,
                                  std::pair<double, double> p_tilde) {
  const Eigen::Index p = plan.dim();
  if (group1.p != p || group2.p != p || mu.size() != p) {
    throw std::invalid_argument("pooled_mean_forms: dimension mismatch");
  }
  const double p1 = p_tilde.first;
  const double p2 = p_tilde.second;
  if (!(p1 >= 0.0) || !(p2 >= 0.0)) {
    throw std::invalid_argument("pooled_mean_forms: mean weights must be nonnegative");
  }
  const double n1 = static_cast<double>(group1.n);
  const double n2 = static_cast<double>(group2.n);
  const double dof = n1 + n2 - 2.0;
  if (!(dof >= 1.0)) {
    throw std::invalid_argument("pooled_mean_forms: need N1 + N2 - 2 >= 1");
  }

  const Eigen::MatrixXd s_pooled =
      (n1 * group1.S.mat() + n2 * group2.S.mat()) / dof;
  const SymSolver<double> solver(Eigen::MatrixXd(s_pooled + plan.A().mat()));

  const Eigen::VectorXd m1 = group1.X.transpose() * group1.R / n1;
  const Eigen::VectorXd m2 = group2.X.transpose() * group2.R / n2;
  Eigen::MatrixXd rhs(p, 3);
  rhs.col(0) = m1;
  rhs.col(1) = m2;
  rhs.col(2) = mu;
  const Eigen::MatrixXd sol = solver.solve(rhs);

  const double a = m1.dot(sol.col(0));
  const double b = m2.dot(sol.col(1));
  const double cl = m1.dot(sol.col(1));
  const double d = mu.dot(sol.col(2));
  const double e1 = m1.dot(sol.col(2));
  const double e2 = m2.dot(sol.col(2));

  // First update: remove p1 m1 m1'. Forms through K1 = (M - p1 m1 m1')^-1.
  const double den1 = guarded(1.0 - p1 * a, "1 - p1*m1'M^-1 m1");
  const double a1 = a / den1;
  const double cl1 = cl / den1;
  const double e1_1 = e1 / den1;
  const double b1 = b + p1 * cl * cl / den1;
  const double e2_1 = e2 + p1 * cl * e1 / den1;
  const double d1 = d + p1 * e1 * e1 / den1;

  // Second update: remove p2 m2 m2' from K1^-1.
  const double den2 = guarded(1.0 - p2 * b1, "1 - p2*m2'K1 m2");

  PooledMeanForms out;
  out.p1_tilde = p1;
  out.p2_tilde = p2;
  out.m2_m2.exact = b1 / den2;
  out.m1_m2.exact = cl1 / den2;
  out.m1_m1.exact = a1 + p2 * cl1 * cl1 / den2;
  out.mu_m2.exact = e2_1 / den2;
  out.mu_m1.exact = e1_1 + p2 * cl1 * e2_1 / den2;
  out.mu_mu.exact = d1 + p2 * e2_1 * e2_1 / den2;

  // Asymptotic simplification: each self form keeps only its own overlap,
  // cross forms vanish, and the deterministic direction mu is unaffected.
  out.m1_m1.approx = a / guarded(1.0 - p1 * a, "1 - p1*a (approx)");
  out.m2_m2.approx = b / guarded(1.0 - p2 * b, "1 - p2*b (approx)");
  out.m1_m2.approx = 0.0;
  out.mu_m1.approx = 0.0;
  out.mu_m2.approx = 0.0;
  out.mu_mu.approx = d;
  return out;
}

}  // namespace shrinkeq
