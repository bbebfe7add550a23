#include "shrinkeq/moment_bounds.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace shrinkeq {

namespace {

constexpr double kPi = 3.14159265358979323846;

void require_even_order(int k, const char* who) {
  if (k < 2 || k % 2 != 0) {
    throw std::invalid_argument(std::string(who) + ": need an even moment order >= 2, got " +
                                std::to_string(k));
  }
}

}  // namespace

ConcentrationConstants::ConcentrationConstants(std::map<int, double> bl, std::map<int, double> bq2,
                                               Provenance provenance)
    : bl_(std::move(bl)), bq2_(std::move(bq2)), provenance_(provenance) {
  for (const auto& [k, v] : bl_) {
    if (k < 1 || !(v >= 0.0)) {
      throw std::invalid_argument("ConcentrationConstants: bad bL entry at order " +
                                  std::to_string(k));
    }
  }
  for (const auto& [k, v] : bq2_) {
    if (k < 1 || !(v >= 0.0)) {
      throw std::invalid_argument("ConcentrationConstants: bad bQ2 entry at order " +
                                  std::to_string(k));
    }
  }
  for (const auto& [k, v] : bl_) {
    const auto doubled = bl_.find(2 * k);
    if (doubled != bl_.end() && v > std::sqrt(doubled->second) + 1e-12) {
      throw std::invalid_argument("ConcentrationConstants: bL(" + std::to_string(k) +
                                  ") = " + std::to_string(v) + " exceeds sqrt(bL(" +
                                  std::to_string(2 * k) + "))");
    }
  }
}

double ConcentrationConstants::bL(int k) const {
  const auto it = bl_.find(k);
  if (it == bl_.end()) {
    throw std::invalid_argument("ConcentrationConstants: no bL entry for order " +
                                std::to_string(k));
  }
  return it->second;
}

double ConcentrationConstants::bQ2(int k) const {
  const auto it = bq2_.find(k);
  if (it == bq2_.end()) {
    throw std::invalid_argument("ConcentrationConstants: no bQ2 entry for order " +
                                std::to_string(k));
  }
  return it->second;
}

double gaussian_even_moment(int k) {
  require_even_order(k, "gaussian_even_moment");
  double m = 1.0;
  for (int j = k - 1; j > 1; j -= 2) m *= j;
  return m;
}

double lognormal_mixed_moment(const Eigen::VectorXi& t, const Eigen::VectorXd& mu_tilde,
                              const SymMatrixXd& sigma_tilde) {
  if (t.size() != mu_tilde.size() || t.size() != sigma_tilde.dim()) {
    throw std::invalid_argument("lognormal_mixed_moment: size mismatch");
  }
  if ((t.array() < 0).any()) {
    throw std::invalid_argument("lognormal_mixed_moment: exponents must be nonnegative");
  }
  const Eigen::VectorXd td = t.cast<double>();
  return std::exp(td.dot(mu_tilde) + 0.5 * td.dot(sigma_tilde.mat() * td));
}

double bound_bL_lognormal(int k, double mu_star, double sigma_star) {
  require_even_order(k, "bound_bL_lognormal");
  if (!(sigma_star >= 0.0)) {
    throw std::invalid_argument("bound_bL_lognormal: sigma_star must be nonnegative");
  }
  const double ks = static_cast<double>(k) * sigma_star;
  return gaussian_even_moment(k) * std::pow(kPi / 2.0, k) * std::pow(sigma_star, k) *
         std::exp(static_cast<double>(k) * mu_star + 0.5 * ks * ks);
}

double bound_bQ2_lognormal(Eigen::Index p, double mu_star, double sigma_star) {
  if (p < 1) throw std::invalid_argument("bound_bQ2_lognormal: need p >= 1");
  if (!(sigma_star >= 0.0)) {
    throw std::invalid_argument("bound_bQ2_lognormal: sigma_star must be nonnegative");
  }
  return 4.0 * kPi * kPi * sigma_star * sigma_star * static_cast<double>(p) *
         std::exp(4.0 * mu_star + 8.0 * sigma_star * sigma_star);
}

double bound_bL_tail(int k, const ExponentialTail& tail) {
  if (k < 1) throw std::invalid_argument("bound_bL_tail: need k >= 1");
  if (!(tail.C >= 0.0) || !(tail.c > 0.0) || !(tail.b > 0.0)) {
    throw std::invalid_argument("bound_bL_tail: exponential envelope needs C >= 0, c > 0, b > 0");
  }
  const double kb = static_cast<double>(k) / tail.b;
  return tail.C / std::pow(tail.c, kb) * kb * std::tgamma(kb);
}

double bound_bL_tail(int k, const PolynomialTail& tail) {
  if (k < 1) throw std::invalid_argument("bound_bL_tail: need k >= 1");
  if (!(tail.C >= 0.0) || !(tail.b > 0.0)) {
    throw std::invalid_argument("bound_bL_tail: polynomial envelope needs C >= 0, b > 0");
  }
  if (tail.b <= static_cast<double>(k + 1)) {
    throw std::invalid_argument("bound_bL_tail: polynomial tail with b = " +
                                std::to_string(tail.b) + " cannot certify moment order " +
                                std::to_string(k) + "; need b > k + 1");
  }
  return tail.C * (1.0 + 1.0 / (tail.b - static_cast<double>(k + 1)));
}

double bound_bQ2_from_bQ1(int k, const std::map<int, double>& bq1, double trace_m_sigma) {
  require_even_order(k, "bound_bQ2_from_bQ1");
  if (!(trace_m_sigma >= 0.0)) {
    throw std::invalid_argument("bound_bQ2_from_bQ1: trace must be nonnegative");
  }
  const auto need = [&bq1](int order) {
    const auto it = bq1.find(order);
    if (it == bq1.end()) {
      throw std::invalid_argument("bound_bQ2_from_bQ1: missing bQ1 order " +
                                  std::to_string(order));
    }
    if (!(it->second >= 0.0)) {
      throw std::invalid_argument("bound_bQ2_from_bQ1: negative bQ1 at order " +
                                  std::to_string(order));
    }
    return it->second;
  };
  const double b2k = need(2 * k);
  const double bk = need(k);
  const double b2 = need(2);
  return std::pow(3.0, k - 1) *
         (b2k + std::pow(2.0, k) * bk * std::pow(trace_m_sigma, 0.5 * k) +
          std::pow(b2, k));
}

}  // namespace shrinkeq
