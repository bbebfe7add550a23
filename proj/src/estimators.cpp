#include "shrinkeq/estimators.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "shrinkeq/errors.hpp"
#include "shrinkeq/regularized_inverse.hpp"

namespace shrinkeq {

Eigen::VectorXd estimate_Ri2_alpha(const DesignSample& sample, const ShrinkagePlanXd& plan) {
  if (sample.p != plan.dim()) {
    throw std::invalid_argument("estimate_Ri2_alpha: sample dimension " +
                                std::to_string(sample.p) + " vs plan dimension " +
                                std::to_string(plan.dim()));
  }
  const double n = static_cast<double>(sample.n);
  const SymSolver<double> solver(Eigen::MatrixXd(sample.S.mat() + plan.A().mat()));
  const Eigen::MatrixXd z = solver.solve(sample.X.transpose());
  Eigen::VectorXd est(sample.n);
  for (Eigen::Index i = 0; i < sample.n; ++i) {
    const double s = sample.R(i) * sample.R(i) / n * sample.X.row(i).dot(z.col(i));
    const double denom = 1.0 - s;
    if (denom <= 1e-12) {
      throw numerical_error("estimate_Ri2_alpha: observation " + std::to_string(i) +
                            " degenerate, 1 - s_i = " + std::to_string(denom));
    }
    est(i) = s / denom;
  }
  return est;
}

double estimate_gamma(const Eigen::VectorXd& r2_alpha, double alpha_hat) {
  if (r2_alpha.size() < 1) throw std::invalid_argument("estimate_gamma: empty estimate vector");
  if ((r2_alpha.array() < 0.0).any()) {
    throw std::invalid_argument("estimate_gamma: estimates must be nonnegative");
  }
  if (!(alpha_hat > 0.0)) {
    throw std::invalid_argument("estimate_gamma: alpha_hat must be positive, got " +
                                std::to_string(alpha_hat));
  }
  const double n = static_cast<double>(r2_alpha.size());
  return (1.0 - (1.0 / (1.0 + r2_alpha.array())).sum() / n) / alpha_hat;
}

double solve_t0(const std::function<double(double)>& gamma_of_t_a,
                std::pair<double, double> bracket, double tol) {
  if (!(bracket.first > 0.0) || !(bracket.second > bracket.first)) {
    throw std::invalid_argument("solve_t0: need 0 < bracket.first < bracket.second");
  }
  if (!(tol > 0.0)) throw std::invalid_argument("solve_t0: tol must be positive");

  const auto phi = [&gamma_of_t_a](double t) { return gamma_of_t_a(t) / t - 1.0; };

  double lo = bracket.first;
  double hi = bracket.second;
  double phi_lo = phi(lo);
  double phi_hi = phi(hi);
  // gamma(tA)/t decreases from +inf to 0, so the root sits where phi changes
  // sign; grow the bracket geometrically until it straddles.
  int doublings = 0;
  while (phi_lo <= 0.0 && doublings < 60) {
    lo /= 2.0;
    phi_lo = phi(lo);
    ++doublings;
  }
  doublings = 0;
  while (phi_hi >= 0.0 && doublings < 60) {
    hi *= 2.0;
    phi_hi = phi(hi);
    ++doublings;
  }
  if (!(phi_lo > 0.0) || !(phi_hi < 0.0)) {
    throw numerical_error("solve_t0: no root of gamma(tA)/t = 1 in [" + std::to_string(lo) +
                          ", " + std::to_string(hi) + "] after 60 doublings; phi endpoints " +
                          std::to_string(phi_lo) + ", " + std::to_string(phi_hi));
  }

  for (int iter = 0; iter < 240; ++iter) {
    const double mid = std::sqrt(lo * hi);
    const double val = phi(mid);
    if (std::abs(val) <= tol) return mid;
    if (val > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  throw numerical_error("solve_t0: bisection stalled, bracket [" + std::to_string(lo) + ", " +
                        std::to_string(hi) + "]");
}

ResolventSweep::ResolventSweep(const DesignSample& sample, const ShrinkagePlanXd& plan,
                               const std::vector<Eigen::VectorXd>& vectors) {
  if (sample.p != plan.dim()) {
    throw std::invalid_argument("ResolventSweep: sample dimension " + std::to_string(sample.p) +
                                " vs plan dimension " + std::to_string(plan.dim()));
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(sample.S.mat(), plan.A().mat());
  if (es.info() != Eigen::Success) {
    throw numerical_error("ResolventSweep: generalized eigendecomposition failed");
  }
  // Columns v satisfy S v = lambda A v with V'AV = Id, so
  // (S + tA)^-1 = V (Lambda + t)^-1 V'.
  lambda_ = es.eigenvalues().cwiseMax(0.0);
  const Eigen::MatrixXd& v = es.eigenvectors();
  wx_ = v.transpose() * sample.X.transpose();
  wv_.reserve(vectors.size());
  for (const auto& vec : vectors) {
    if (vec.size() != sample.p) {
      throw std::invalid_argument("ResolventSweep: vector length " + std::to_string(vec.size()) +
                                  " vs dimension " + std::to_string(sample.p));
    }
    wv_.push_back(v.transpose() * vec);
  }
}

Eigen::VectorXd ResolventSweep::leverages(double t) const {
  if (!(t > 0.0)) throw std::invalid_argument("ResolventSweep::leverages: need t > 0");
  const Eigen::ArrayXd inv = (lambda_.array() + t).inverse();
  return ((wx_.array().square().colwise() * inv).colwise().sum()).matrix().transpose();
}

double ResolventSweep::form(std::size_t i, std::size_t j, double t) const {
  if (i >= wv_.size() || j >= wv_.size()) {
    throw std::invalid_argument("ResolventSweep::form: vector index out of range");
  }
  if (!(t > 0.0)) throw std::invalid_argument("ResolventSweep::form: need t > 0");
  return (wv_[i].array() * wv_[j].array() / (lambda_.array() + t)).sum();
}

QuadformEstimate estimate_population_quadform(const Eigen::VectorXd& v,
                                              const DesignSample& sample,
                                              const ShrinkagePlanXd& plan, double tol) {
  if (v.size() != sample.p) {
    throw std::invalid_argument("estimate_population_quadform: v length " +
                                std::to_string(v.size()) + " vs dimension " +
                                std::to_string(sample.p));
  }
  if (sample.n < 3) {
    throw std::invalid_argument("estimate_population_quadform: need n >= 3, got " +
                                std::to_string(sample.n));
  }
  const double n = static_cast<double>(sample.n);
  const Eigen::VectorXd mu_hat = sample.X.transpose() * sample.R / n;
  const ResolventSweep sweep(sample, plan, {v, mu_hat});

  const Eigen::ArrayXd r2 = sample.R.array().square();
  const double r2_mean = r2.mean();
  if (!(r2_mean > 0.0)) {
    throw numerical_error("estimate_population_quadform: all radial factors vanish");
  }

  // gamma_hat(tA) from the leverage identity, under the normalization that
  // the mean squared radial factor calibrates alpha_hat.
  const auto gamma_at = [&](double t) {
    const Eigen::ArrayXd lever = sweep.leverages(t).array();
    const Eigen::ArrayXd s = r2 * lever / n;
    if ((1.0 - s <= 1e-12).any()) {
      throw numerical_error("estimate_population_quadform: degenerate leverage at t = " +
                            std::to_string(t));
    }
    const Eigen::ArrayXd est = s / (1.0 - s);
    const double alpha_hat = est.mean() / r2_mean;
    if (!(alpha_hat > 0.0)) {
      throw numerical_error("estimate_population_quadform: alpha_hat not positive at t = " +
                            std::to_string(t));
    }
    return (1.0 - (1.0 / (1.0 + est)).mean()) / alpha_hat;
  };

  QuadformEstimate out;
  out.t0 = solve_t0(gamma_at, {plan.t_floor() / 100.0, 100.0 * plan.t_floor()}, tol);
  out.gamma_t0 = gamma_at(out.t0);

  const double vv = sweep.form(0, 0, out.t0);
  const double vm = sweep.form(0, 1, out.t0);
  const double mm = sweep.form(1, 1, out.t0);
  const double denom = 1.0 - mm;
  if (std::abs(denom) < 1e-12) {
    throw singularity_error("estimate_population_quadform: mean-direction denominator " +
                            std::to_string(denom) + " within 1e-12 of zero");
  }
  out.value = out.t0 * (vv + vm * vm / denom);
  return out;
}

}  // namespace shrinkeq
