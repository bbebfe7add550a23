#include "shrinkeq/lda.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "shrinkeq/det_equiv.hpp"
#include "shrinkeq/errors.hpp"
#include "shrinkeq/matrix_io.hpp"
#include "shrinkeq/regularized_inverse.hpp"

namespace shrinkeq {

namespace {

double standard_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// Composite Simpson weights; the grid length must be odd.
double simpson(const Eigen::VectorXd& values, double spacing) {
  const Eigen::Index m = values.size();
  double sum = values(0) + values(m - 1);
  for (Eigen::Index i = 1; i + 1 < m; ++i) sum += (i % 2 == 1 ? 4.0 : 2.0) * values(i);
  return sum * spacing / 3.0;
}

double trapezoid(const Eigen::VectorXd& values, double spacing) {
  const Eigen::Index m = values.size();
  return (values.sum() - 0.5 * (values(0) + values(m - 1))) * spacing;
}

}  // namespace

LdaStats::LdaStats(Eigen::VectorXd muhat1, Eigen::VectorXd muhat2, SymMatrixXd sigmahat_pooled,
                   Eigen::Index n1, Eigen::Index n2, double pi1, double pi2)
    : muhat1_(std::move(muhat1)),
      muhat2_(std::move(muhat2)),
      sigmahat_(std::move(sigmahat_pooled)),
      n1_(n1),
      n2_(n2),
      pi1_(pi1),
      pi2_(pi2) {
  const Eigen::Index p = muhat1_.size();
  if (p < 1 || muhat2_.size() != p || sigmahat_.dim() != p) {
    throw std::invalid_argument("LdaStats: mean and covariance dimensions disagree");
  }
  if (n1_ < 1 || n2_ < 1 || n1_ + n2_ - 2 < 1) {
    throw std::invalid_argument("LdaStats: need N1, N2 >= 1 with N1 + N2 - 2 >= 1");
  }
  if (!(pi1_ > 0.0) || !(pi1_ < 1.0) || !(pi2_ > 0.0) || !(pi2_ < 1.0) ||
      std::abs(pi1_ + pi2_ - 1.0) > 1e-12) {
    throw std::invalid_argument("LdaStats: priors must lie in (0,1) and sum to 1");
  }
  rho_ = static_cast<double>(p) / static_cast<double>(n1_ + n2_ - 2);
  if (!(rho_ > 0.0) || !(rho_ < 1.0)) {
    throw std::invalid_argument("LdaStats: rho = " + std::to_string(rho_) +
                                " must lie strictly between 0 and 1");
  }
  if (!check_psd(sigmahat_, 1e-8)) {
    throw std::invalid_argument("LdaStats: pooled covariance estimate not PSD");
  }
}

LdaStats lda_stats_from_data(const Eigen::MatrixXd& y1, const Eigen::MatrixXd& y2, double pi1) {
  if (y1.cols() != y2.cols()) {
    throw std::invalid_argument("lda_stats_from_data: column counts differ, " +
                                std::to_string(y1.cols()) + " vs " + std::to_string(y2.cols()));
  }
  const Eigen::Index n1 = y1.rows();
  const Eigen::Index n2 = y2.rows();
  if (n1 < 2 || n2 < 2) {
    throw std::invalid_argument("lda_stats_from_data: need at least 2 observations per group");
  }
  const Eigen::VectorXd m1 = y1.colwise().mean();
  const Eigen::VectorXd m2 = y2.colwise().mean();
  const Eigen::MatrixXd c1 = y1.rowwise() - m1.transpose();
  const Eigen::MatrixXd c2 = y2.rowwise() - m2.transpose();
  Eigen::MatrixXd pooled = Eigen::MatrixXd::Zero(y1.cols(), y1.cols());
  pooled.selfadjointView<Eigen::Lower>().rankUpdate(c1.transpose(), 1.0);
  pooled.selfadjointView<Eigen::Lower>().rankUpdate(c2.transpose(), 1.0);
  pooled = pooled.selfadjointView<Eigen::Lower>();
  pooled /= static_cast<double>(n1 + n2 - 2);
  return LdaStats(m1, m2, SymMatrixXd(pooled, 1e-9), n1, n2, pi1, 1.0 - pi1);
}

LdaStats lda_stats_from_csv(const std::string& path1, const std::string& path2, double pi1) {
  return lda_stats_from_data(read_matrix_csv(path1), read_matrix_csv(path2), pi1);
}

LdaCorrections lda_corrections(const LdaStats& stats) {
  const double p = static_cast<double>(stats.p());
  const double n1 = static_cast<double>(stats.N1());
  const double n2 = static_cast<double>(stats.N2());
  const double rho = stats.rho();
  const double shrink = 1.0 - rho;

  const SymSolver<double> solver(stats.sigmahat());
  const Eigen::VectorXd dhat = stats.muhat2() - stats.muhat1();
  const Eigen::VectorXd d = solver.solve(dhat);
  const double base = dhat.dot(d);
  const double m1_raw = stats.muhat1().dot(d);
  const double m2_raw = stats.muhat2().dot(d);

  LdaCorrections out;
  out.maha_hat = shrink * base - p / n1 - p / n2;
  out.sigma2_d = base / (shrink * shrink);
  const double d1 = p / (n1 * shrink);
  const double d2 = p / (n2 * shrink);
  out.mu1_d = m1_raw + d1;
  out.mu2_d = m2_raw - d2;
  const double delta = out.mu2_d - out.mu1_d;
  if (std::abs(delta) < 1e-12) {
    throw numerical_error("lda_corrections: corrected group means indistinguishable, gap " +
                          std::to_string(delta));
  }
  const double log_ratio = std::log(stats.pi1() / stats.pi2());
  const double midpoint = 0.5 * (m1_raw + m2_raw);
  // Grouped so that equal sample sizes cancel the two bias terms exactly in
  // floating point, making t_star == t_naive bit-for-bit when pi1 == pi2.
  out.t_star = out.sigma2_d / delta * log_ratio + (midpoint + 0.5 * (d1 - d2));
  out.t_naive = midpoint + log_ratio;
  return out;
}

double lda_misclassification(double mu1_d, double mu2_d, double sigma_d, double t, double pi1) {
  if (!(sigma_d > 0.0)) {
    throw std::invalid_argument("lda_misclassification: sigma_d must be positive, got " +
                                std::to_string(sigma_d));
  }
  if (!(pi1 > 0.0) || !(pi1 < 1.0)) {
    throw std::invalid_argument("lda_misclassification: pi1 must lie in (0,1)");
  }
  const double pi2 = 1.0 - pi1;
  return pi1 * (1.0 - standard_normal_cdf((t - mu1_d) / sigma_d)) +
         pi2 * standard_normal_cdf((t - mu2_d) / sigma_d);
}

bool elliptical_threshold(const Eigen::VectorXd& y, const Eigen::VectorXd& sigma_inv_diff,
                          double alpha_p1, double pi1, double pi2, double cross_term) {
  if (y.size() != sigma_inv_diff.size()) {
    throw std::invalid_argument("elliptical_threshold: y length " + std::to_string(y.size()) +
                                " vs direction length " + std::to_string(sigma_inv_diff.size()));
  }
  if (!(pi1 > 0.0) || !(pi2 > 0.0)) {
    throw std::invalid_argument("elliptical_threshold: priors must be positive");
  }
  return y.dot(sigma_inv_diff) >= alpha_p1 * std::log(pi1 / pi2) + cross_term;
}

RadialDensity RadialDensity::atoms(Eigen::VectorXd r, Eigen::VectorXd w) {
  if (r.size() < 1 || r.size() != w.size()) {
    throw std::invalid_argument("RadialDensity::atoms: need matching nonempty vectors");
  }
  if ((r.array() <= 0.0).any()) {
    throw std::invalid_argument("RadialDensity::atoms: atom locations must be positive");
  }
  if ((w.array() < 0.0).any() || std::abs(w.sum() - 1.0) > 1e-10) {
    throw std::invalid_argument("RadialDensity::atoms: weights must be nonnegative and sum to 1");
  }
  RadialDensity d;
  d.kind_ = Kind::atoms;
  d.r_ = std::move(r);
  d.w_ = std::move(w);
  return d;
}

RadialDensity RadialDensity::grid(Eigen::VectorXd r, Eigen::VectorXd f) {
  const Eigen::Index m = r.size();
  if (m < 3 || m % 2 == 0 || f.size() != m) {
    throw std::invalid_argument("RadialDensity::grid: need an odd number (>= 3) of grid points");
  }
  if (!(r(0) > 0.0)) {
    throw std::invalid_argument("RadialDensity::grid: grid must start at a positive radius");
  }
  const double spacing = r(1) - r(0);
  if (!(spacing > 0.0)) throw std::invalid_argument("RadialDensity::grid: grid must increase");
  for (Eigen::Index i = 1; i < m; ++i) {
    const double step = r(i) - r(i - 1);
    if (std::abs(step - spacing) > 1e-9 * std::max(1.0, spacing)) {
      throw std::invalid_argument("RadialDensity::grid: grid spacing not uniform at index " +
                                  std::to_string(i));
    }
  }
  if ((f.array() < 0.0).any()) {
    throw std::invalid_argument("RadialDensity::grid: density values must be nonnegative");
  }
  const double mass = simpson(f, spacing);
  if (std::abs(mass - 1.0) > 1e-6) {
    throw std::invalid_argument("RadialDensity::grid: density integrates to " +
                                std::to_string(mass) + ", not 1");
  }
  RadialDensity d;
  d.kind_ = Kind::grid;
  d.r_ = std::move(r);
  d.w_ = std::move(f);
  return d;
}

QuadratureValue elliptical_misclassification(const RadialDensity& f_r, double mu1_d, double mu2_d,
                                             double sigma_d, double t, double pi1) {
  if (!(sigma_d > 0.0)) {
    throw std::invalid_argument("elliptical_misclassification: sigma_d must be positive");
  }
  if (!(pi1 > 0.0) || !(pi1 < 1.0)) {
    throw std::invalid_argument("elliptical_misclassification: pi1 must lie in (0,1)");
  }
  const double pi2 = 1.0 - pi1;
  const auto rate_at = [&](double r) {
    return pi1 * standard_normal_cdf((mu1_d - t) / (sigma_d * r)) +
           pi2 * standard_normal_cdf((t - mu2_d) / (sigma_d * r));
  };

  QuadratureValue out;
  if (f_r.kind() == RadialDensity::Kind::atoms) {
    double value = 0.0;
    for (Eigen::Index j = 0; j < f_r.r().size(); ++j) value += f_r.weights()(j) * rate_at(f_r.r()(j));
    out.value = value;
    out.error_estimate = 0.0;
    return out;
  }

  const Eigen::Index m = f_r.r().size();
  const double spacing = f_r.r()(1) - f_r.r()(0);
  Eigen::VectorXd integrand(m);
  for (Eigen::Index i = 0; i < m; ++i) integrand(i) = f_r.weights()(i) * rate_at(f_r.r()(i));
  out.value = simpson(integrand, spacing);
  out.error_estimate = std::abs(out.value - trapezoid(integrand, spacing));
  return out;
}

std::vector<RdaRow> rda_sweep(const LdaStats& stats, const SymMatrixXd& target,
                              const Eigen::VectorXd& w_grid) {
  const Eigen::Index p = stats.p();
  if (target.dim() != p) {
    throw std::invalid_argument("rda_sweep: target dimension " + std::to_string(target.dim()) +
                                " vs " + std::to_string(p));
  }
  if ((w_grid.array() < 0.0).any() || (w_grid.array() >= 1.0).any()) {
    throw std::invalid_argument("rda_sweep: blend weights must lie in [0, 1)");
  }
  const double target_min_eig = min_eigenvalue(target);
  const double pd = static_cast<double>(p);
  const double n1 = static_cast<double>(stats.N1());
  const double n2 = static_cast<double>(stats.N2());
  const double dof = n1 + n2 - 2.0;
  const double sigma_bar2 = stats.sigmahat().mat().trace() / pd;
  const Eigen::VectorXd dhat = stats.muhat2() - stats.muhat1();
  const double log_ratio = std::log(stats.pi1() / stats.pi2());

  std::vector<RdaRow> table;
  table.reserve(static_cast<std::size_t>(w_grid.size()));
  for (Eigen::Index k = 0; k < w_grid.size(); ++k) {
    const double w = w_grid(k);
    RdaRow row;
    row.w = w;

    if (w < 1e-14) {
      const LdaCorrections base = lda_corrections(stats);
      row.mu1_d = base.mu1_d;
      row.mu2_d = base.mu2_d;
      row.sigma2_d = base.sigma2_d;
      row.t_star = base.t_star;
      row.t_naive = base.t_naive;
      const double sd = std::sqrt(base.sigma2_d);
      row.rate_star = lda_misclassification(base.mu1_d, base.mu2_d, sd, base.t_star, stats.pi1());
      row.rate_naive =
          lda_misclassification(base.mu1_d, base.mu2_d, sd, base.t_naive, stats.pi1());
      const SymSolver<double> solver(stats.sigmahat());
      const Eigen::VectorXd d = solver.solve(dhat);
      row.maha_plugin = dhat.dot(d);
      row.sigma2_plugin = row.maha_plugin;
      table.push_back(row);
      continue;
    }

    if (!(target_min_eig > 0.0)) {
      throw std::invalid_argument("rda_sweep: target must be positive definite for w > 0, "
                                  "min eigenvalue " + std::to_string(target_min_eig));
    }
    const double blend = w / (1.0 - w);
    const double lambda_w = 1.0 / (1.0 - w);
    const ShrinkagePlanXd plan_w(SymMatrixXd(blend * target.mat()), blend * target_min_eig);

    // Isotropic working model for the fixed point: Sigma ~ sigma_bar2 * Id,
    // unit radial factors, sample size = the pooled degrees of freedom.
    const SymMatrixXd sigma_iso = SymMatrixXd::scaled_identity(p, sigma_bar2);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(dof));
    const DetEquivSolution sol =
        solve_alpha_gamma(sigma_iso, plan_w, ones, static_cast<Eigen::Index>(dof));
    const double xi =
        solve_xi(sigma_iso, plan_w, sigma_iso, ones, static_cast<Eigen::Index>(dof), sol);
    row.alpha = sol.alpha_bar;
    row.gamma = sol.gamma_bar;
    row.xi = xi;

    // Deterministic stand-in for (Sigmahat + A_w)^-1 is Mbar^-1 with
    // Mbar = A_w + gamma sigma_bar2 Id; direction information enters through
    // the data vectors, with their noise overlaps corrected.
    const SymSolver<double> mbar(
        Eigen::MatrixXd(plan_w.A().mat() + sol.gamma_bar * sigma_iso.mat()));
    const Eigen::MatrixXd w_inv = mbar.inverse();
    const double tr1 = w_inv.trace();
    const Eigen::VectorXd dk = w_inv * dhat;
    const double k_d2d = dk.squaredNorm();
    const double m1k = stats.muhat1().dot(dk);
    const double m2k = stats.muhat2().dot(dk);

    row.mu1_d = lambda_w * (m1k + sigma_bar2 * tr1 / n1);
    row.mu2_d = lambda_w * (m2k - sigma_bar2 * tr1 / n2);
    // Realized projection variance: sandwich equivalent on the data direction;
    // the mean noise inside dhat is part of the realized direction, so k_d2d
    // enters uncorrected.
    row.sigma2_d = lambda_w * lambda_w * (1.0 + xi) * sigma_bar2 * k_d2d;

    const double delta = row.mu2_d - row.mu1_d;
    if (std::abs(delta) < 1e-12) {
      throw numerical_error("rda_sweep: corrected group means indistinguishable at w = " +
                            std::to_string(w));
    }
    row.t_star = row.sigma2_d / delta * log_ratio + 0.5 * (row.mu1_d + row.mu2_d);
    const SymSolver<double> blend_solver(
        Eigen::MatrixXd((1.0 - w) * stats.sigmahat().mat() + w * target.mat()));
    const Eigen::VectorXd d_data = blend_solver.solve(dhat);
    row.t_naive = 0.5 * (stats.muhat1() + stats.muhat2()).dot(d_data) + log_ratio;
    row.maha_plugin = dhat.dot(d_data);
    row.sigma2_plugin = d_data.dot(stats.sigmahat().mat() * d_data);

    const double sd = std::sqrt(row.sigma2_d);
    row.rate_star = lda_misclassification(row.mu1_d, row.mu2_d, sd, row.t_star, stats.pi1());
    row.rate_naive = lda_misclassification(row.mu1_d, row.mu2_d, sd, row.t_naive, stats.pi1());
    table.push_back(row);
  }
  return table;
}

}  // namespace shrinkeq
