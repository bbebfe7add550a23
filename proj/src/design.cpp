#include "shrinkeq/design.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "shrinkeq/matrix_io.hpp"

namespace shrinkeq {

namespace {

constexpr double kPi = 3.14159265358979323846;

double standard_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

Eigen::VectorXd draw_standard_normal(std::mt19937_64& engine, Eigen::Index p) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(p);
  for (Eigen::Index j = 0; j < p; ++j) z(j) = normal(engine);
  return z;
}

Eigen::MatrixXd block_pair(const Eigen::MatrixXd& m) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(2 * m.rows(), 2 * m.cols());
  out.topLeftCorner(m.rows(), m.cols()) = m;
  out.bottomRightCorner(m.rows(), m.cols()) = m;
  return out;
}

Eigen::VectorXd stack_pair(const Eigen::VectorXd& v) {
  Eigen::VectorXd out(2 * v.size());
  out << v, v;
  return out;
}

}  // namespace

Eigen::MatrixXd psd_sqrt(const SymMatrixXd& m) {
  detail::require_nonempty(m, "psd_sqrt");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.mat());
  if (es.info() != Eigen::Success) throw numerical_error("psd_sqrt: eigendecomposition failed");
  Eigen::VectorXd ev = es.eigenvalues();
  const double scale = std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
  if (ev(0) < -1e-10 * std::max(scale, 1.0)) {
    throw std::invalid_argument("psd_sqrt: matrix not PSD, min eigenvalue " +
                                std::to_string(ev(0)));
  }
  ev = ev.cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

DesignDistribution DesignDistribution::gaussian(SymMatrixXd sigma) {
  DesignDistribution d;
  d.kind_ = DesignKind::gaussian;
  d.p_ = sigma.dim();
  d.transform_ = psd_sqrt(sigma);
  d.sigma_eff_ = std::move(sigma);
  return d;
}

DesignDistribution DesignDistribution::lognormal_centered(Eigen::VectorXd mu_tilde,
                                                          SymMatrixXd sigma_tilde) {
  if (mu_tilde.size() != sigma_tilde.dim()) {
    throw std::invalid_argument("lognormal_centered: mu_tilde length " +
                                std::to_string(mu_tilde.size()) + " vs dimension " +
                                std::to_string(sigma_tilde.dim()));
  }
  DesignDistribution d;
  d.kind_ = DesignKind::lognormal_centered;
  d.p_ = sigma_tilde.dim();
  d.transform_ = psd_sqrt(sigma_tilde);
  d.mu_tilde_ = std::move(mu_tilde);
  d.lognormal_mean_ =
      (d.mu_tilde_.array() + 0.5 * sigma_tilde.mat().diagonal().array()).exp().matrix();
  // Cov(exp Y_i, exp Y_j) = m_i m_j (exp(Sigma_ij) - 1) with m_i = E exp(Y_i).
  Eigen::MatrixXd cov(d.p_, d.p_);
  for (Eigen::Index i = 0; i < d.p_; ++i) {
    for (Eigen::Index j = 0; j < d.p_; ++j) {
      cov(i, j) =
          d.lognormal_mean_(i) * d.lognormal_mean_(j) * std::expm1(sigma_tilde.mat()(i, j));
    }
  }
  d.sigma_eff_ = SymMatrixXd(cov, 1e-9);
  return d;
}

DesignDistribution DesignDistribution::gaussian_copula_centered(SymMatrixXd r_corr) {
  const Eigen::Index p = r_corr.dim();
  for (Eigen::Index i = 0; i < p; ++i) {
    if (std::abs(r_corr.mat()(i, i) - 1.0) > 1e-12) {
      throw std::invalid_argument("gaussian_copula_centered: diagonal entry " +
                                  std::to_string(r_corr.mat()(i, i)) + " at " + std::to_string(i) +
                                  " is not 1");
    }
  }
  DesignDistribution d;
  d.kind_ = DesignKind::gaussian_copula_centered;
  d.p_ = p;
  d.transform_ = psd_sqrt(r_corr);
  // Cov(Phi(Z_i), Phi(Z_j)) = arcsin(rho_ij / 2) / (2 pi).
  Eigen::MatrixXd cov(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) {
      cov(i, j) = std::asin(0.5 * r_corr.mat()(i, j)) / (2.0 * kPi);
    }
  }
  d.sigma_eff_ = SymMatrixXd(cov, 1e-9);
  return d;
}

DesignDistribution DesignDistribution::sphere_uniform(SymMatrixXd sigma) {
  DesignDistribution d;
  d.kind_ = DesignKind::sphere_uniform;
  d.p_ = sigma.dim();
  d.transform_ = psd_sqrt(sigma);
  d.sigma_eff_ = std::move(sigma);
  return d;
}

DesignDistribution DesignDistribution::bounded_iid(SymMatrixXd sigma, BoundedEntryLaw law) {
  DesignDistribution d;
  d.kind_ = DesignKind::bounded_iid;
  d.p_ = sigma.dim();
  d.transform_ = psd_sqrt(sigma);
  d.sigma_eff_ = std::move(sigma);
  d.entry_law_ = law;
  return d;
}

DesignDistribution DesignDistribution::doubled() const {
  if (p_ == 0) throw std::logic_error("DesignDistribution::doubled: empty distribution");
  DesignDistribution d;
  d.kind_ = kind_;
  d.p_ = 2 * p_;
  d.sigma_eff_ = SymMatrixXd(block_pair(sigma_eff_.mat()));
  // Every family samples p iid scalars through transform_, so a block
  // transform yields two independent copies of the p-dimensional law (for
  // the sphere it is the 2p-dimensional member with the block target, whose
  // normalization gives the same direct-sum covariance).
  d.transform_ = block_pair(transform_);
  if (mu_tilde_.size() > 0) d.mu_tilde_ = stack_pair(mu_tilde_);
  if (lognormal_mean_.size() > 0) d.lognormal_mean_ = stack_pair(lognormal_mean_);
  d.entry_law_ = entry_law_;
  return d;
}

std::string DesignDistribution::name() const {
  switch (kind_) {
    case DesignKind::gaussian: return "gaussian";
    case DesignKind::lognormal_centered: return "lognormal_centered";
    case DesignKind::gaussian_copula_centered: return "gaussian_copula_centered";
    case DesignKind::sphere_uniform: return "sphere_uniform";
    case DesignKind::bounded_iid:
      return entry_law_ == BoundedEntryLaw::uniform ? "bounded_iid_uniform"
                                                    : "bounded_iid_rademacher";
  }
  return "unknown";
}

void DesignDistribution::sample_row(std::mt19937_64& engine, RowRef out) const {
  if (out.size() != p_) {
    throw std::invalid_argument("sample_row: output length " + std::to_string(out.size()) +
                                " vs dimension " + std::to_string(p_));
  }
  switch (kind_) {
    case DesignKind::gaussian: {
      out = (transform_ * draw_standard_normal(engine, p_)).transpose();
      return;
    }
    case DesignKind::lognormal_centered: {
      const Eigen::VectorXd y = mu_tilde_ + transform_ * draw_standard_normal(engine, p_);
      out = (y.array().exp() - lognormal_mean_.array()).matrix().transpose();
      return;
    }
    case DesignKind::gaussian_copula_centered: {
      const Eigen::VectorXd z = transform_ * draw_standard_normal(engine, p_);
      for (Eigen::Index j = 0; j < p_; ++j) out(j) = standard_normal_cdf(z(j)) - 0.5;
      return;
    }
    case DesignKind::sphere_uniform: {
      Eigen::VectorXd z = draw_standard_normal(engine, p_);
      double norm = z.norm();
      while (norm < 1e-300) {
        z = draw_standard_normal(engine, p_);
        norm = z.norm();
      }
      out = (transform_ * (z * (std::sqrt(static_cast<double>(p_)) / norm))).transpose();
      return;
    }
    case DesignKind::bounded_iid: {
      Eigen::VectorXd u(p_);
      if (entry_law_ == BoundedEntryLaw::uniform) {
        const double half_width = std::sqrt(3.0);
        std::uniform_real_distribution<double> unif(-half_width, half_width);
        for (Eigen::Index j = 0; j < p_; ++j) u(j) = unif(engine);
      } else {
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        for (Eigen::Index j = 0; j < p_; ++j) u(j) = unif(engine) < 0.5 ? -1.0 : 1.0;
      }
      out = (transform_ * u).transpose();
      return;
    }
  }
  throw std::logic_error("sample_row: unhandled design kind");
}

RadialLaw RadialLaw::deterministic(Eigen::VectorXd r) {
  if (r.size() == 0) throw std::invalid_argument("RadialLaw::deterministic: empty vector");
  if ((r.array() < 0.0).any()) {
    throw std::invalid_argument("RadialLaw::deterministic: radial factors must be nonnegative");
  }
  RadialLaw law;
  law.kind_ = Kind::deterministic;
  law.second_moment_ = r.squaredNorm() / static_cast<double>(r.size());
  law.values_ = std::move(r);
  return law;
}

RadialLaw RadialLaw::constant_one() {
  RadialLaw law;
  law.kind_ = Kind::constant_one;
  law.second_moment_ = 1.0;
  return law;
}

RadialLaw RadialLaw::pareto(double index) {
  if (!(index > 2.0)) {
    throw std::invalid_argument("RadialLaw::pareto: index must exceed 2 for a finite E R^2, got " +
                                std::to_string(index));
  }
  RadialLaw law;
  law.kind_ = Kind::pareto;
  law.pareto_index_ = index;
  // E R^2 = a x_m^2 / (a - 2); x_m chosen so the law has unit second moment.
  law.pareto_scale_ = std::sqrt((index - 2.0) / index);
  law.second_moment_ = 1.0;
  return law;
}

std::string RadialLaw::name() const {
  switch (kind_) {
    case Kind::deterministic: return "deterministic";
    case Kind::constant_one: return "constant_one";
    case Kind::pareto: return "pareto(" + std::to_string(pareto_index_) + ")";
  }
  return "unknown";
}

Eigen::VectorXd RadialLaw::realize(Eigen::Index n, std::uint64_t seed,
                                   std::uint64_t replication) const {
  if (n < 1) throw std::invalid_argument("RadialLaw::realize: need n >= 1");
  switch (kind_) {
    case Kind::deterministic: {
      if (n % values_.size() != 0) {
        throw std::invalid_argument("RadialLaw::realize: requested n " + std::to_string(n) +
                                    " is not a multiple of the stored length " +
                                    std::to_string(values_.size()));
      }
      if (values_.size() == n) return values_;
      Eigen::VectorXd tiled(n);
      for (Eigen::Index i = 0; i < n; ++i) tiled(i) = values_(i % values_.size());
      return tiled;
    }
    case Kind::constant_one: return Eigen::VectorXd::Ones(n);
    case Kind::pareto: {
      auto engine = make_engine(seed, replication, Stream::radial);
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      Eigen::VectorXd r(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        double u = unif(engine);
        while (u <= 0.0) u = unif(engine);
        r(i) = pareto_scale_ * std::pow(u, -1.0 / pareto_index_);
      }
      return r;
    }
  }
  throw std::logic_error("RadialLaw::realize: unhandled kind");
}

DesignSample sample_design(const DesignDistribution& dist, const RadialLaw& radial,
                           const Eigen::VectorXd& mu, Eigen::Index n, std::uint64_t seed,
                           std::uint64_t replication, Stream design_stream) {
  if (n < 1) throw std::invalid_argument("sample_design: need n >= 1, got " + std::to_string(n));
  const Eigen::Index p = dist.p();
  if (mu.size() != 0 && mu.size() != p) {
    throw std::invalid_argument("sample_design: mu length " + std::to_string(mu.size()) +
                                " vs dimension " + std::to_string(p));
  }
  DesignSample sample;
  sample.n = n;
  sample.p = p;
  sample.mu = mu.size() == 0 ? Eigen::VectorXd::Zero(p).eval() : mu;
  sample.R = radial.realize(n, seed, replication);
  sample.X.resize(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    auto engine = make_engine(seed, replication, design_stream, static_cast<std::uint64_t>(i));
    dist.sample_row(engine, sample.X.row(i));
  }
  sample.S = weighted_second_moment(sample.X, sample.R);
  return sample;
}

SymMatrixXd weighted_second_moment(const Eigen::MatrixXd& x, const Eigen::VectorXd& r) {
  const Eigen::MatrixXd weighted = r.asDiagonal() * x;
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(x.cols(), x.cols());
  s.selfadjointView<Eigen::Lower>().rankUpdate(weighted.transpose(),
                                               1.0 / static_cast<double>(x.rows()));
  s = s.selfadjointView<Eigen::Lower>();
  return SymMatrixXd(s, 1e-9);
}

DesignSample design_sample_from_data(Eigen::MatrixXd x, Eigen::VectorXd r) {
  if (x.rows() < 1 || x.cols() < 1) {
    throw std::invalid_argument("design_sample_from_data: design matrix is empty");
  }
  if (r.size() != x.rows()) {
    throw std::invalid_argument("design_sample_from_data: radial length " +
                                std::to_string(r.size()) + " vs " + std::to_string(x.rows()) +
                                " rows");
  }
  if ((r.array() < 0.0).any()) {
    throw std::invalid_argument("design_sample_from_data: radial factors must be nonnegative");
  }
  DesignSample sample;
  sample.n = x.rows();
  sample.p = x.cols();
  sample.mu = Eigen::VectorXd::Zero(sample.p);
  sample.S = weighted_second_moment(x, r);
  sample.X = std::move(x);
  sample.R = std::move(r);
  return sample;
}

SymMatrixXd lognormal_matching(const SymMatrixXd& target) {
  detail::require_nonempty(target, "lognormal_matching");
  const Eigen::Index p = target.dim();
  Eigen::VectorXd var_tilde(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    const double t = target.mat()(i, i);
    if (!(t > 0.0)) {
      throw std::invalid_argument("lognormal_matching: target diagonal must be positive, entry " +
                                  std::to_string(i) + " is " + std::to_string(t));
    }
    // e^v (e^v - 1) = t  =>  e^v = (1 + sqrt(1 + 4t)) / 2.
    var_tilde(i) = std::log(0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t)));
  }
  Eigen::MatrixXd sigma_tilde(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) {
      const double arg =
          1.0 + target.mat()(i, j) * std::exp(-0.5 * (var_tilde(i) + var_tilde(j)));
      if (!(arg > 0.0)) {
        throw std::invalid_argument("lognormal_matching: infeasible target at (" +
                                    std::to_string(i) + "," + std::to_string(j) + ")");
      }
      sigma_tilde(i, j) = std::log(arg);
    }
  }
  SymMatrixXd result(sigma_tilde, 1e-9);
  if (!check_psd(result, 1e-8)) {
    throw std::invalid_argument("lognormal_matching: matched log-scale covariance is not PSD");
  }
  return result;
}

void write_sample_csv(const std::string& path, const DesignSample& sample) {
  Eigen::MatrixXd obs(sample.n, sample.p);
  for (Eigen::Index i = 0; i < sample.n; ++i) {
    obs.row(i) = sample.mu.transpose() + sample.R(i) * sample.X.row(i);
  }
  write_matrix_csv(path, obs);
}

}  // namespace shrinkeq
