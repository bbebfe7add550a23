#pragma once

#include <Eigen/Dense>

#include <functional>
#include <utility>
#include <vector>

#include "shrinkeq/design.hpp"
#include "shrinkeq/sym_matrix.hpp"

namespace shrinkeq {

// Per-observation estimates of R_i^2 * alpha from the leverage identity
//   est_i = s_i / (1 - s_i),  s_i = (R_i^2 / n) X_i'(S+A)^-1 X_i,
// all computed against one factorization. An observation with 1 - s_i at or
// below 1e-12 is reported as degenerate.
Eigen::VectorXd estimate_Ri2_alpha(const DesignSample& sample, const ShrinkagePlanXd& plan);

// gamma_hat = (1/alpha_hat) * (1 - (1/n) sum_i 1/(1 + est_i)).
double estimate_gamma(const Eigen::VectorXd& r2_alpha, double alpha_hat);

// Root of gamma(t A)/t = 1 in t. The evaluator returns gamma(t A); the
// bracket grows geometrically (up to 60 doublings each way) until it
// straddles the root, then log-scale bisection runs until |gamma/t - 1|
// drops below tol.
double solve_t0(const std::function<double(double)>& gamma_of_t_a,
                std::pair<double, double> bracket, double tol);

struct QuadformEstimate {
  double value = 0.0;
  double t0 = 0.0;
  double gamma_t0 = 0.0;
};

// Estimates v'(Sigma + A)^-1 v from one sample: calibrates t0 so the shrunken
// resolvent at t0 A matches the population target, with the mean direction
// removed exactly through a rank-one update. Needs n >= 3.
QuadformEstimate estimate_population_quadform(const Eigen::VectorXd& v,
                                              const DesignSample& sample,
                                              const ShrinkagePlanXd& plan, double tol = 1e-10);

// Shared eigenbasis for the whole family t -> (S + t A)^-1: one O(p^3 + n p^2)
// setup, then every leverage sweep or bilinear form costs O(n p) or O(p).
class ResolventSweep {
 public:
  ResolventSweep(const DesignSample& sample, const ShrinkagePlanXd& plan,
                 const std::vector<Eigen::VectorXd>& vectors);

  // X_i'(S + tA)^-1 X_i for every observation.
  Eigen::VectorXd leverages(double t) const;

  // vectors[i]'(S + tA)^-1 vectors[j].
  double form(std::size_t i, std::size_t j, double t) const;

 private:
  Eigen::VectorXd lambda_;
  Eigen::MatrixXd wx_;
  std::vector<Eigen::VectorXd> wv_;
};

}  // namespace shrinkeq
