#pragma once

#include <Eigen/Dense>

#include <optional>

#include "shrinkeq/design.hpp"
#include "shrinkeq/sym_matrix.hpp"

namespace shrinkeq {

// Quadratic forms in the mean-estimate direction mu_hat = X'R/n, against the
// same factorization: mu_hat'M^-1 mu_hat, x'M^-1 mu_hat, and the exact
// rank-one update mu_hat'(S + A - mu_hat mu_hat')^-1 mu_hat = q/(1-q).
struct MuHatForms {
  double mu_m_mu = 0.0;
  double x_m_mu = 0.0;
  double shrunken_mu_form = 0.0;
};

// The six resolvent forms evaluated on one design, all from one factorization
// of M = S + A:
//   f = x'M^-1 x                  h = (1/sqrt(n)) alpha'DX M^-1 x
//   g = (1/n) alpha'DX M^-1 X'D alpha
// and the Sigma_eps-weighted variants F, G, H with M^-1 Sigma_eps M^-1 inside.
struct FormValues {
  double f = 0.0;
  double g = 0.0;
  double h = 0.0;
  std::optional<double> F;
  std::optional<double> G;
  std::optional<double> H;
  std::optional<MuHatForms> mu_forms;
  bool renormalized_x = false;
  bool renormalized_alpha = false;
};

// x and alpha are normalized to unit length when they are not already (the
// flags in the result record that); Sigma_eps, when given, must be PSD.
FormValues empirical_forms(const DesignSample& sample, const ShrinkagePlanXd& plan,
                           const Eigen::VectorXd& x, const Eigen::VectorXd& alpha,
                           const std::optional<SymMatrixXd>& sigma_eps = std::nullopt);

}  // namespace shrinkeq
