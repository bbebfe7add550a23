#pragma once

#include <Eigen/Dense>

#include <map>

#include "shrinkeq/sym_matrix.hpp"

namespace shrinkeq {

// P(|X| > s) <= C exp(-c s^b).
struct ExponentialTail {
  double C = 1.0;
  double c = 1.0;
  double b = 1.0;
};

// P(|X| > s) <= C s^-b.
struct PolynomialTail {
  double C = 1.0;
  double b = 1.0;
};

// Moment-bound families for linear forms (bL, indexed by moment order) and
// centered quadratic forms (bQ2). Keys are the moment orders; values must be
// nonnegative and satisfy the Lyapunov consistency bL(k) <= sqrt(bL(2k))
// whenever both orders are present.
class ConcentrationConstants {
 public:
  enum class Provenance { analytic_bound, monte_carlo_estimate };

  ConcentrationConstants(std::map<int, double> bl, std::map<int, double> bq2,
                         Provenance provenance);

  double bL(int k) const;
  double bQ2(int k) const;
  bool has_bL(int k) const { return bl_.count(k) > 0; }
  bool has_bQ2(int k) const { return bq2_.count(k) > 0; }
  Provenance provenance() const { return provenance_; }

 private:
  std::map<int, double> bl_;
  std::map<int, double> bq2_;
  Provenance provenance_;
};

// (k-1)!! for even k: the k-th absolute moment of a standard Gaussian.
double gaussian_even_moment(int k);

// E prod_i Y_i^{t_i} for Y = exp(N(mu_tilde, sigma_tilde)) with nonnegative
// integer exponents t: exp(t'mu + t'sigma t / 2).
double lognormal_mixed_moment(const Eigen::VectorXi& t, const Eigen::VectorXd& mu_tilde,
                              const SymMatrixXd& sigma_tilde);

// Moment bound E|v'X|^k for unit v and centered log-normal X whose log-scale
// parameters are bounded by mu_star and sigma_star; k even.
double bound_bL_lognormal(int k, double mu_star, double sigma_star);

// Variance-proxy bound for centered quadratic forms of the same family.
double bound_bQ2_lognormal(Eigen::Index p, double mu_star, double sigma_star);

// Moment bounds integrated from tail envelopes. The polynomial envelope needs
// b > k + 1, otherwise the requested moment is not certified finite.
double bound_bL_tail(int k, const ExponentialTail& tail);
double bound_bL_tail(int k, const PolynomialTail& tail);

// Quadratic-form bound assembled from linear-form bounds bq1 and the trace
// tr(M Sigma); needs orders 2k, k and 2 in bq1, and even k >= 2.
double bound_bQ2_from_bQ1(int k, const std::map<int, double>& bq1, double trace_m_sigma);

}  // namespace shrinkeq
