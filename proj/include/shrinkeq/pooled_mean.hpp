#pragma once

#include <Eigen/Dense>

#include <utility>

#include "shrinkeq/design.hpp"
#include "shrinkeq/sym_matrix.hpp"

namespace shrinkeq {

// One bilinear form through the mean-corrected pooled resolvent, carried both
// ways: `exact` chains the two rank-one updates through Sherman-Morrison;
// `approx` is the asymptotic simplification (self-overlap kept, cross terms
// dropped).
struct ExactApproxPair {
  double exact = 0.0;
  double approx = 0.0;
  double gap() const { return exact - approx; }
};

// Bilinear forms v'(Sigmahat + A)^-1 w where Sigmahat + A =
// S_pooled + A - p1_tilde m1 m1' - p2_tilde m2 m2', with m_g the group mean
// estimates X_g'R_g/N_g and v, w ranging over {m1, m2, mu}.
struct PooledMeanForms {
  ExactApproxPair m1_m1;
  ExactApproxPair m2_m2;
  ExactApproxPair m1_m2;
  ExactApproxPair mu_m1;
  ExactApproxPair mu_m2;
  ExactApproxPair mu_mu;
  double p1_tilde = 0.0;
  double p2_tilde = 0.0;
};

PooledMeanForms pooled_mean_forms(const DesignSample& group1, const DesignSample& group2,
                                  const ShrinkagePlanXd& plan, const Eigen::VectorXd& mu,
                                  std::pair<double, double> p_tilde);

}  // namespace shrinkeq
