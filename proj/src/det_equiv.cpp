#include "shrinkeq/det_equiv.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "shrinkeq/errors.hpp"
#include "shrinkeq/regularized_inverse.hpp"

namespace shrinkeq {

namespace {

void check_radial_inputs(const SymMatrixXd& sigma, const ShrinkagePlanXd& plan,
                         const Eigen::VectorXd& R, Eigen::Index n, const char* who) {
  if (sigma.dim() != plan.dim()) {
    throw std::invalid_argument(std::string(who) + ": Sigma dimension " +
                                std::to_string(sigma.dim()) + " vs plan dimension " +
                                std::to_string(plan.dim()));
  }
  if (n < 1) throw std::invalid_argument(std::string(who) + ": need n >= 1");
  if (R.size() != n) {
    throw std::invalid_argument(std::string(who) + ": radial vector length " +
                                std::to_string(R.size()) + " vs n " + std::to_string(n));
  }
  if ((R.array() < 0.0).any()) {
    throw std::invalid_argument(std::string(who) + ": radial factors must be nonnegative");
  }
}

// Eigenvalues of A^{-1/2} Sigma A^{-1/2}; reduces both trace maps to scalar
// sums so each fixed-point sweep is O(n + p).
Eigen::VectorXd generalized_spectrum(const SymMatrixXd& sigma, const ShrinkagePlanXd& plan) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma.mat(), plan.A().mat(),
                                                               Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw numerical_error("solve_alpha_gamma: generalized eigendecomposition failed");
  }
  Eigen::VectorXd lambda = es.eigenvalues();
  const double top = std::max(1.0, std::abs(lambda(lambda.size() - 1)));
  if (lambda(0) < -1e-8 * top) {
    throw std::invalid_argument("solve_alpha_gamma: Sigma not PSD, min generalized eigenvalue " +
                                std::to_string(lambda(0)));
  }
  return lambda.cwiseMax(0.0);
}

double gamma_map(const Eigen::VectorXd& R2, double alpha, Eigen::Index n) {
  return (R2.array() / (1.0 + R2.array() * alpha)).sum() / static_cast<double>(n);
}

double alpha_map(const Eigen::VectorXd& lambda, double gamma, Eigen::Index n) {
  return (lambda.array() / (1.0 + gamma * lambda.array())).sum() / static_cast<double>(n);
}

}  // namespace

DetEquivSolution solve_alpha_gamma(const SymMatrixXd& sigma, const ShrinkagePlanXd& plan,
                                   const Eigen::VectorXd& R, Eigen::Index n, double tol,
                                   int max_iter) {
  check_radial_inputs(sigma, plan, R, n, "solve_alpha_gamma");
  if (!(tol > 0.0)) throw std::invalid_argument("solve_alpha_gamma: tol must be positive");
  if (max_iter < 1) throw std::invalid_argument("solve_alpha_gamma: max_iter must be >= 1");

  const Eigen::VectorXd lambda = generalized_spectrum(sigma, plan);
  const Eigen::VectorXd R2 = R.array().square();
  const double alpha_max = alpha_map(lambda, 0.0, n);
  const double scale = std::max(1.0, alpha_max);

  DetEquivSolution sol;
  double alpha = 0.5 * alpha_max;
  int iterations = 0;
  bool converged = false;

  // Damped fixed-point pass; the composition alpha -> T_alpha(T_gamma(alpha))
  // is increasing, so damping 0.5 keeps iterates inside [0, alpha_max].
  for (; iterations < max_iter; ++iterations) {
    const double next = alpha_map(lambda, gamma_map(R2, alpha, n), n);
    const double defect = std::abs(next - alpha);
    alpha = 0.5 * alpha + 0.5 * next;
    if (defect <= 0.1 * tol * scale) {
      converged = true;
      ++iterations;
      break;
    }
  }

  if (!converged) {
    // Bisection fallback on psi(alpha) = T_alpha(T_gamma(alpha)) - alpha,
    // which is >= 0 at 0 and <= 0 at alpha_max.
    double lo = 0.0, hi = alpha_max;
    for (int b = 0; b < 200; ++b) {
      const double mid = 0.5 * (lo + hi);
      const double psi = alpha_map(lambda, gamma_map(R2, mid, n), n) - mid;
      if (psi >= 0.0) {
        lo = mid;
      } else {
        hi = mid;
      }
      ++iterations;
      if (hi - lo <= 1e-16 * scale) break;
    }
    alpha = 0.5 * (lo + hi);
  }

  sol.alpha_bar = alpha;
  sol.gamma_bar = gamma_map(R2, alpha, n);
  sol.iterations = iterations;
  sol.residual = evaluate_fixed_point_residual(sigma, plan, R, n, sol);
  if (!(sol.residual <= tol * scale)) {
    throw numerical_error("solve_alpha_gamma: did not converge, residual " +
                          std::to_string(sol.residual) + " at alpha " +
                          std::to_string(sol.alpha_bar) + ", gamma " +
                          std::to_string(sol.gamma_bar) + " after " +
                          std::to_string(sol.iterations) + " iterations");
  }
  return sol;
}

double evaluate_fixed_point_residual(const SymMatrixXd& sigma, const ShrinkagePlanXd& plan,
                                     const Eigen::VectorXd& R, Eigen::Index n,
                                     const DetEquivSolution& sol) {
  check_radial_inputs(sigma, plan, R, n, "evaluate_fixed_point_residual");
  const SymSolver<double> solver(
      Eigen::MatrixXd(plan.A().mat() + sol.gamma_bar * sigma.mat()));
  const double trace = solver.solve(sigma.mat()).trace() / static_cast<double>(n);
  const Eigen::VectorXd R2 = R.array().square();
  const double alpha_defect = std::abs(sol.alpha_bar - trace);
  const double gamma_defect = std::abs(sol.gamma_bar - gamma_map(R2, sol.alpha_bar, n));
  return std::max(alpha_defect, gamma_defect);
}

double det_equiv_quadform(const Eigen::VectorXd& x, const SymMatrixXd& sigma,
                          const ShrinkagePlanXd& plan, const DetEquivSolution& sol) {
  if (x.size() != plan.dim()) {
    throw std::invalid_argument("det_equiv_quadform: x length " + std::to_string(x.size()) +
                                " vs dimension " + std::to_string(plan.dim()));
  }
  const SymSolver<double> solver(
      Eigen::MatrixXd(sol.gamma_bar * sigma.mat() + plan.A().mat()));
  return x.dot(solver.solve(x));
}

double solve_xi(const SymMatrixXd& sigma, const ShrinkagePlanXd& plan, const SymMatrixXd& b,
                const Eigen::VectorXd& R, Eigen::Index n, const DetEquivSolution& sol) {
  check_radial_inputs(sigma, plan, R, n, "solve_xi");
  if (b.dim() != plan.dim()) {
    throw std::invalid_argument("solve_xi: B dimension " + std::to_string(b.dim()) +
                                " vs plan dimension " + std::to_string(plan.dim()));
  }
  const Eigen::VectorXd R2 = R.array().square();
  const double c4 =
      (R2.array().square() / (1.0 + R2.array() * sol.alpha_bar).square()).sum() /
      static_cast<double>(n);
  const SymSolver<double> solver(
      Eigen::MatrixXd(plan.A().mat() + sol.gamma_bar * sigma.mat()));
  const Eigen::MatrixXd w = solver.inverse();
  const Eigen::MatrixXd wsw = w * sigma.mat() * w;
  const double t_b = wsw.cwiseProduct(b.mat()).sum() / static_cast<double>(n);
  const double t_sigma = wsw.cwiseProduct(sigma.mat()).sum() / static_cast<double>(n);
  const double margin = c4 * t_sigma;
  if (!(margin < 1.0)) {
    throw numerical_error("solve_xi: no stable solution, c4 * T_Sigma = " +
                          std::to_string(margin) + " must be below 1");
  }
  return c4 * t_b / (1.0 - margin);
}

double det_equiv_sandwich(const Eigen::VectorXd& x, const SymMatrixXd& sigma,
                          const ShrinkagePlanXd& plan, const SymMatrixXd& b,
                          const DetEquivSolution& sol, double xi_bar) {
  if (x.size() != plan.dim() || b.dim() != plan.dim()) {
    throw std::invalid_argument("det_equiv_sandwich: dimension mismatch");
  }
  const SymSolver<double> solver(
      Eigen::MatrixXd(plan.A().mat() + sol.gamma_bar * sigma.mat()));
  const Eigen::VectorXd y = solver.solve(x);
  return y.dot(b.mat() * y) + xi_bar * y.dot(sigma.mat() * y);
}

double det_equiv_mean_form(const Eigen::VectorXd& alpha, const Eigen::VectorXd& R, double rho,
                           double L) {
  if (alpha.size() != R.size()) {
    throw std::invalid_argument("det_equiv_mean_form: alpha length " +
                                std::to_string(alpha.size()) + " vs radial length " +
                                std::to_string(R.size()));
  }
  if (!(rho >= 0.0) || !(L >= 0.0)) {
    throw std::invalid_argument("det_equiv_mean_form: rho and L must be nonnegative");
  }
  if ((R.array() < 0.0).any()) {
    throw std::invalid_argument("det_equiv_mean_form: radial factors must be nonnegative");
  }
  return 1.0 -
         (alpha.array().square() / (1.0 + rho * R.array().square() * L)).sum();
}

}  // namespace shrinkeq
