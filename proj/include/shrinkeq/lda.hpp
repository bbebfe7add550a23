#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "shrinkeq/sym_matrix.hpp"

namespace shrinkeq {

// Two-group summary statistics: group mean estimates, pooled covariance
// estimate with N1 + N2 - 2 degrees of freedom, and class priors. The
// dimension ratio rho = p/(N1+N2-2) must stay below one for the
// Wishart-based corrections to apply.
class LdaStats {
 public:
  LdaStats(Eigen::VectorXd muhat1, Eigen::VectorXd muhat2, SymMatrixXd sigmahat_pooled,
           Eigen::Index n1, Eigen::Index n2, double pi1, double pi2);

  const Eigen::VectorXd& muhat1() const { return muhat1_; }
  const Eigen::VectorXd& muhat2() const { return muhat2_; }
  const SymMatrixXd& sigmahat() const { return sigmahat_; }
  Eigen::Index N1() const { return n1_; }
  Eigen::Index N2() const { return n2_; }
  Eigen::Index p() const { return muhat1_.size(); }
  double pi1() const { return pi1_; }
  double pi2() const { return pi2_; }
  double rho() const { return rho_; }

 private:
  Eigen::VectorXd muhat1_;
  Eigen::VectorXd muhat2_;
  SymMatrixXd sigmahat_;
  Eigen::Index n1_ = 0;
  Eigen::Index n2_ = 0;
  double pi1_ = 0.5;
  double pi2_ = 0.5;
  double rho_ = 0.0;
};

// Builds LdaStats from raw observation matrices (one row per observation).
LdaStats lda_stats_from_data(const Eigen::MatrixXd& y1, const Eigen::MatrixXd& y2, double pi1);

// Reads the two groups from CSV files (one row per observation).
LdaStats lda_stats_from_csv(const std::string& path1, const std::string& path2, double pi1);

// Bias-corrected discriminant summary:
//   maha_hat  debiased Mahalanobis distance estimate
//   sigma2_d  predicted variance of the projection on d = Sigmahat^-1 Dhat
//   mu1_d/mu2_d  debiased projection means
//   t_star    corrected threshold; t_naive  plug-in threshold
struct LdaCorrections {
  double sigma2_d = 0.0;
  double mu1_d = 0.0;
  double mu2_d = 0.0;
  double t_star = 0.0;
  double t_naive = 0.0;
  double maha_hat = 0.0;
};

LdaCorrections lda_corrections(const LdaStats& stats);

// pi1 (1 - Phi((t - mu1)/sigma)) + pi2 Phi((t - mu2)/sigma).
double lda_misclassification(double mu1_d, double mu2_d, double sigma_d, double t, double pi1);

// Scale-mixture discriminant rule: true means the statistic favors group 2.
// alpha_p1 is the per-point radial proxy estimated upstream.
bool elliptical_threshold(const Eigen::VectorXd& y, const Eigen::VectorXd& sigma_inv_diff,
                          double alpha_p1, double pi1, double pi2, double cross_term);

// Radial mixing density, either exact atoms or a uniform grid of density
// values integrated by Simpson's rule.
class RadialDensity {
 public:
  enum class Kind { atoms, grid };

  static RadialDensity atoms(Eigen::VectorXd r, Eigen::VectorXd w);
  static RadialDensity grid(Eigen::VectorXd r, Eigen::VectorXd f);

  Kind kind() const { return kind_; }
  const Eigen::VectorXd& r() const { return r_; }
  const Eigen::VectorXd& weights() const { return w_; }

 private:
  RadialDensity() = default;

  Kind kind_ = Kind::atoms;
  Eigen::VectorXd r_;
  Eigen::VectorXd w_;
};

struct QuadratureValue {
  double value = 0.0;
  double error_estimate = 0.0;
};

// Mixture misclassification rate: the Gaussian rate averaged over the radial
// density. Atom densities are summed exactly; grids go through Simpson with a
// trapezoid cross-check as the error estimate.
QuadratureValue elliptical_misclassification(const RadialDensity& f_r, double mu1_d, double mu2_d,
                                             double sigma_d, double t, double pi1);

// One row of the regularized-discriminant sweep over blend weights w, with
// Sigmatilde_w = (1-w) Sigmahat + w target. alpha/gamma/xi are the isotropic
// working-model fixed-point values (zero on the w=0 row, which delegates to
// lda_corrections).
struct RdaRow {
  double w = 0.0;
  double alpha = 0.0;
  double gamma = 0.0;
  double xi = 0.0;
  double mu1_d = 0.0;
  double mu2_d = 0.0;
  double sigma2_d = 0.0;
  double t_star = 0.0;
  double t_naive = 0.0;
  double rate_star = 0.0;
  double rate_naive = 0.0;
  double sigma2_plugin = 0.0;
  double maha_plugin = 0.0;
};

std::vector<RdaRow> rda_sweep(const LdaStats& stats, const SymMatrixXd& target,
                              const Eigen::VectorXd& w_grid);

}  // namespace shrinkeq
