#pragma once

#include <Eigen/Dense>

#include <optional>

#include "shrinkeq/sym_matrix.hpp"

namespace shrinkeq {

// Fixed point of the coupled pair
//   alpha = (1/n) tr(Sigma (A + gamma Sigma)^-1),
//   gamma = (1/n) sum_i R_i^2 / (1 + R_i^2 alpha),
// plus the optional second-order coefficient xi. residual is the larger
// defect of the two equations, re-evaluated independently of the solver loop.
struct DetEquivSolution {
  double alpha_bar = 0.0;
  double gamma_bar = 0.0;
  std::optional<double> xi_bar;
  double residual = 0.0;
  int iterations = 0;
};

DetEquivSolution solve_alpha_gamma(const SymMatrixXd& sigma, const ShrinkagePlanXd& plan,
                                   const Eigen::VectorXd& R, Eigen::Index n, double tol = 1e-12,
                                   int max_iter = 500);

// Defect of (alpha_bar, gamma_bar) computed from a dense factorization of
// A + gamma Sigma; deliberately shares no state with solve_alpha_gamma.
double evaluate_fixed_point_residual(const SymMatrixXd& sigma, const ShrinkagePlanXd& plan,
                                     const Eigen::VectorXd& R, Eigen::Index n,
                                     const DetEquivSolution& sol);

// x'(gamma Sigma + A)^-1 x: the deterministic stand-in for x'(S + A)^-1 x.
double det_equiv_quadform(const Eigen::VectorXd& x, const SymMatrixXd& sigma,
                          const ShrinkagePlanXd& plan, const DetEquivSolution& sol);

// Coefficient xi solving the linear sandwich equation for target B. Requires
// the stability margin c4 * T_Sigma < 1; the failing product is reported.
double solve_xi(const SymMatrixXd& sigma, const ShrinkagePlanXd& plan, const SymMatrixXd& b,
                const Eigen::VectorXd& R, Eigen::Index n, const DetEquivSolution& sol);

// x' Mbar^-1 (B + xi Sigma) Mbar^-1 x with Mbar = A + gamma Sigma: the
// deterministic stand-in for x'(S+A)^-1 B (S+A)^-1 x.
double det_equiv_sandwich(const Eigen::VectorXd& x, const SymMatrixXd& sigma,
                          const ShrinkagePlanXd& plan, const SymMatrixXd& b,
                          const DetEquivSolution& sol, double xi_bar);

// Mean-direction quadratic form 1 - sum_i alpha_i^2 / (1 + rho R_i^2 L),
// where L is the limiting normalized trace (n/p) * alpha_bar.
double det_equiv_mean_form(const Eigen::VectorXd& alpha, const Eigen::VectorXd& R, double rho,
                           double L);

}  // namespace shrinkeq
