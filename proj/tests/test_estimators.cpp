#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "shrinkeq/design.hpp"
#include "shrinkeq/det_equiv.hpp"
#include "shrinkeq/errors.hpp"
#include "shrinkeq/estimators.hpp"
#include "shrinkeq/lda.hpp"
#include "shrinkeq/matrix_io.hpp"
#include "shrinkeq/portfolio.hpp"
#include "shrinkeq/regularized_inverse.hpp"
#include "shrinkeq/ridge.hpp"
#include "shrinkeq/rng.hpp"
#include "shrinkeq/sym_matrix.hpp"

using namespace shrinkeq;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 eng = make_engine(seed, 0, Stream::misc);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(eng);
  return m;
}

SymMatrixXd random_psd(Eigen::Index p, std::uint64_t seed, double ridge = 0.0) {
  const Eigen::MatrixXd a = random_matrix(p, p, seed);
  Eigen::MatrixXd g = a.transpose() * a / static_cast<double>(p);
  g += ridge * Eigen::MatrixXd::Identity(p, p);
  return SymMatrixXd((g + g.transpose()) / 2.0);
}

Eigen::VectorXd unit_vector(Eigen::Index p, std::uint64_t seed) {
  Eigen::VectorXd v = random_matrix(p, 1, seed).col(0);
  v.normalize();
  return v;
}

DesignSample gaussian_sample(const SymMatrixXd& sigma, Eigen::Index n, std::uint64_t seed,
                             std::uint64_t rep = 0) {
  return sample_design(DesignDistribution::gaussian(sigma), RadialLaw::constant_one(),
                       Eigen::VectorXd::Zero(sigma.dim()), n, seed, rep);
}

double phi_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

TEST_CASE("leverage estimates: limits, scalar identity, degeneracy") {
  const Eigen::Index p = 5, n = 12;
  const ShrinkagePlanXd plan(SymMatrixXd::identity(p), 1.0);
  const DesignSample zero_r = sample_design(
      DesignDistribution::gaussian(SymMatrixXd::identity(p)),
      RadialLaw::deterministic(Eigen::VectorXd::Zero(n)), Eigen::VectorXd::Zero(p), n, 5);
  CHECK(estimate_Ri2_alpha(zero_r, plan).isZero(0.0));

  Eigen::MatrixXd x(1, 1);
  x << 1.7;
  Eigen::VectorXd r(1);
  r << 0.8;
  const DesignSample scalar = design_sample_from_data(x, r);
  const double a = 0.4;
  const Eigen::VectorXd est =
      estimate_Ri2_alpha(scalar, ShrinkagePlanXd(SymMatrixXd::scaled_identity(1, a), a));
  CHECK(est(0) == doctest::Approx(r(0) * r(0) * x(0, 0) * x(0, 0) / a).epsilon(1e-12));

  Eigen::MatrixXd huge(1, 1);
  huge << 1e9;
  const DesignSample dominated = design_sample_from_data(huge, Eigen::VectorXd::Ones(1));
  CHECK_THROWS_AS(
      estimate_Ri2_alpha(dominated, ShrinkagePlanXd(SymMatrixXd::scaled_identity(1, 1e-8), 1e-8)),
      numerical_error);
}

TEST_CASE("leverage and plug-in gamma track the fixed point at n=1000, p=250") {
  const Eigen::Index n = 1000, p = 250;
  const ShrinkagePlanXd plan(SymMatrixXd::identity(p), 1.0);
  const DesignSample sample = gaussian_sample(SymMatrixXd::identity(p), n, 42);
  const DetEquivSolution sol =
      solve_alpha_gamma(SymMatrixXd::identity(p), plan, Eigen::VectorXd::Ones(n), n);

  const Eigen::VectorXd est = estimate_Ri2_alpha(sample, plan);
  const double alpha_hat = est.mean();
  CHECK(std::abs(alpha_hat - sol.alpha_bar) <= 0.02 * sol.alpha_bar);
  CHECK(std::abs(estimate_gamma(est, alpha_hat) - sol.gamma_bar) <= 0.03 * sol.gamma_bar);
}

TEST_CASE("plug-in gamma: algebra and input validation") {
  CHECK(estimate_gamma(Eigen::VectorXd::Zero(6), 0.4) == 0.0);
  const double c = 0.7, alpha = 0.3;
  CHECK(estimate_gamma(Eigen::VectorXd::Constant(9, c), alpha) ==
        doctest::Approx(c / ((1.0 + c) * alpha)).epsilon(1e-14));
  CHECK_THROWS_AS(estimate_gamma(Eigen::VectorXd(), 0.4), std::invalid_argument);
  CHECK_THROWS_AS(estimate_gamma(Eigen::VectorXd::Constant(3, -0.1), 0.4), std::invalid_argument);
  CHECK_THROWS_AS(estimate_gamma(Eigen::VectorXd::Ones(3), 0.0), std::invalid_argument);
}

TEST_CASE("t0 search: golden-ratio root, auto-expansion, failure modes") {
  const auto gamma = [](double t) { return 1.0 / (1.0 + t); };
  const double golden = (std::sqrt(5.0) - 1.0) / 2.0;
  const double t0 = solve_t0(gamma, {0.1, 1.0}, 1e-13);
  CHECK(std::abs(t0 - golden) <= 1e-12);
  CHECK(std::abs(gamma(t0) / t0 - 1.0) <= 1e-13);

  // A bracket nowhere near the root is expanded geometrically.
  CHECK(std::abs(solve_t0(gamma, {1e-6, 2e-6}, 1e-13) - golden) <= 1e-12);
  CHECK(std::abs(solve_t0(gamma, {50.0, 100.0}, 1e-13) - golden) <= 1e-12);

  CHECK_THROWS_AS(solve_t0([](double) { return 0.0; }, {0.1, 1.0}, 1e-10), numerical_error);
  CHECK_THROWS_AS(solve_t0(gamma, {0.0, 1.0}, 1e-10), std::invalid_argument);
  CHECK_THROWS_AS(solve_t0(gamma, {1.0, 0.5}, 1e-10), std::invalid_argument);
  CHECK_THROWS_AS(solve_t0(gamma, {0.1, 1.0}, 0.0), std::invalid_argument);
}

TEST_CASE("resolvent sweep matches dense inverses across the t family") {
  const Eigen::Index n = 25, p = 8;
  const DesignSample sample = gaussian_sample(random_psd(p, 61, 0.2), n, 62);
  const ShrinkagePlanXd plan(random_psd(p, 63, 0.5), 0.3);
  const Eigen::VectorXd v0 = unit_vector(p, 64);
  const Eigen::VectorXd v1 = unit_vector(p, 65);
  const ResolventSweep sweep(sample, plan, {v0, v1});

  for (const double t : {0.3, 1.0, 4.0}) {
    const Eigen::MatrixXd inv =
        Eigen::MatrixXd(sample.S.mat() + t * plan.A().mat()).inverse();
    CHECK(sweep.form(0, 0, t) == doctest::Approx(v0.dot(inv * v0)).epsilon(1e-8));
    CHECK(sweep.form(0, 1, t) == doctest::Approx(v0.dot(inv * v1)).epsilon(1e-8));
    const Eigen::VectorXd lev = sweep.leverages(t);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::VectorXd xi = sample.X.row(i).transpose();
      CHECK(lev(i) == doctest::Approx(xi.dot(inv * xi)).epsilon(1e-8));
    }
  }
  CHECK_THROWS_AS(sweep.form(0, 2, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(sweep.form(0, 0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(sweep.leverages(-1.0), std::invalid_argument);
  CHECK_THROWS_AS(ResolventSweep(sample, plan, {Eigen::VectorXd::Ones(p + 1)}),
                  std::invalid_argument);
}

TEST_CASE("population quadform recovery at n=2000, p=400") {
  const Eigen::Index n = 2000, p = 400;
  const Eigen::VectorXd v = unit_vector(p, 71);
  const ShrinkagePlanXd plan(SymMatrixXd::identity(p), 1.0);

  // Sigma = Id: target 1/2 regardless of direction.
  {
    double acc = 0.0;
    const int reps = 8;
    for (int rep = 0; rep < reps; ++rep) {
      const DesignSample sample = gaussian_sample(SymMatrixXd::identity(p), n, 72, rep);
      const QuadformEstimate est = estimate_population_quadform(v, sample, plan);
      CHECK(est.t0 > 0.0);
      CHECK(std::abs(est.gamma_t0 / est.t0 - 1.0) <= 1e-8);
      acc += est.value;
    }
    CHECK(std::abs(acc / reps - 0.5) <= 0.03 * 0.5);
  }

  // Diagonal spectrum uniform on [0.5, 1.5]: target sum v_j^2 / (sigma_j + 1).
  {
    std::mt19937_64 eng = make_engine(73, 0, Stream::misc);
    std::uniform_real_distribution<double> unif(0.5, 1.5);
    Eigen::VectorXd spectrum(p);
    for (Eigen::Index j = 0; j < p; ++j) spectrum(j) = unif(eng);
    const SymMatrixXd sigma = SymMatrixXd::diagonal(spectrum);
    const double target = (v.array().square() / (spectrum.array() + 1.0)).sum();
    double acc = 0.0;
    const int reps = 8;
    for (int rep = 0; rep < reps; ++rep) {
      acc += estimate_population_quadform(v, gaussian_sample(sigma, n, 74, rep), plan).value;
    }
    CHECK(std::abs(acc / reps - target) <= 0.04 * target);
  }
}

TEST_CASE("population quadform guards") {
  const Eigen::Index p = 4;
  const ShrinkagePlanXd plan(SymMatrixXd::identity(p), 1.0);
  const DesignSample zero_r = sample_design(
      DesignDistribution::gaussian(SymMatrixXd::identity(p)),
      RadialLaw::deterministic(Eigen::VectorXd::Zero(10)), Eigen::VectorXd::Zero(p), 10, 75);
  CHECK_THROWS_AS(estimate_population_quadform(Eigen::VectorXd::Unit(p, 0), zero_r, plan),
                  numerical_error);

  const DesignSample tiny = gaussian_sample(SymMatrixXd::identity(p), 2, 76);
  CHECK_THROWS_AS(estimate_population_quadform(Eigen::VectorXd::Unit(p, 0), tiny, plan),
                  std::invalid_argument);
}

TEST_CASE("LdaStats construction enforces the correction regime") {
  const Eigen::Index p = 3;
  const Eigen::VectorXd m1 = Eigen::VectorXd::Zero(p);
  const Eigen::VectorXd m2 = Eigen::VectorXd::Unit(p, 0);
  const SymMatrixXd id = SymMatrixXd::identity(p);
  CHECK_NOTHROW(LdaStats(m1, m2, id, 10, 12, 0.4, 0.6));
  CHECK_THROWS_AS(LdaStats(m1, m2, id, 10, 12, 0.4, 0.7), std::invalid_argument);
  CHECK_THROWS_AS(LdaStats(m1, m2, id, 10, 12, 0.0, 1.0), std::invalid_argument);
  // p = 10 against 8 pooled degrees of freedom: rho >= 1.
  CHECK_THROWS_AS(LdaStats(Eigen::VectorXd::Zero(10), Eigen::VectorXd::Unit(10, 0),
                           SymMatrixXd::identity(10), 5, 5, 0.5, 0.5),
                  std::invalid_argument);
  Eigen::VectorXd bad(p);
  bad << 1.0, -0.2, 1.0;
  CHECK_THROWS_AS(LdaStats(m1, m2, SymMatrixXd::diagonal(bad), 10, 12, 0.5, 0.5),
                  std::invalid_argument);
}

TEST_CASE("group stats from raw data match hand-computed pooled moments") {
  Eigen::MatrixXd y1(3, 2), y2(2, 2);
  y1 << 1.0, 2.0, 3.0, 0.0, 2.0, 4.0;
  y2 << -1.0, 1.0, 1.0, 3.0;
  const LdaStats stats = lda_stats_from_data(y1, y2, 0.6);
  CHECK(stats.N1() == 3);
  CHECK(stats.N2() == 2);
  CHECK(stats.muhat1().isApprox(Eigen::Vector2d(2.0, 2.0), 1e-14));
  CHECK(stats.muhat2().isApprox(Eigen::Vector2d(0.0, 2.0), 1e-14));

  Eigen::MatrixXd pooled = Eigen::MatrixXd::Zero(2, 2);
  for (int i = 0; i < 3; ++i) {
    const Eigen::Vector2d d = y1.row(i).transpose() - stats.muhat1();
    pooled += d * d.transpose();
  }
  for (int i = 0; i < 2; ++i) {
    const Eigen::Vector2d d = y2.row(i).transpose() - stats.muhat2();
    pooled += d * d.transpose();
  }
  pooled /= 3.0;
  CHECK(stats.sigmahat().mat().isApprox(pooled, 1e-12));
  CHECK(stats.rho() == doctest::Approx(2.0 / 3.0).epsilon(1e-14));

  CHECK_THROWS_AS(lda_stats_from_data(y1, Eigen::MatrixXd::Zero(1, 2), 0.5),
                  std::invalid_argument);
  CHECK_THROWS_AS(lda_stats_from_data(y1, Eigen::MatrixXd::Zero(2, 3), 0.5),
                  std::invalid_argument);

  write_matrix_csv("lda_g1.csv", y1);
  write_matrix_csv("lda_g2.csv", y2);
  const LdaStats from_csv = lda_stats_from_csv("lda_g1.csv", "lda_g2.csv", 0.6);
  CHECK(from_csv.muhat1().isApprox(stats.muhat1(), 0.0));
  CHECK(from_csv.sigmahat().mat().isApprox(stats.sigmahat().mat(), 0.0));
  std::remove("lda_g1.csv");
  std::remove("lda_g2.csv");
}

TEST_CASE("discriminant corrections: frozen instance at p=50, N1=N2=100") {
  const Eigen::Index p = 50;
  const Eigen::VectorXd m1 = Eigen::VectorXd::Zero(p);
  const Eigen::VectorXd m2 = 2.0 * Eigen::VectorXd::Unit(p, 0);
  const LdaStats stats(m1, m2, SymMatrixXd::identity(p), 100, 100, 0.5, 0.5);
  const LdaCorrections corr = lda_corrections(stats);

  const double rho = 50.0 / 198.0;
  const double base = 4.0;  // Dhat'Sigmahat^-1 Dhat with Sigmahat = Id
  CHECK(corr.maha_hat == doctest::Approx((1.0 - rho) * base - 1.0).epsilon(1e-12));
  CHECK(corr.maha_hat == doctest::Approx(1.98989898989899).epsilon(1e-12));
  CHECK(corr.sigma2_d == doctest::Approx(base / ((1.0 - rho) * (1.0 - rho))).epsilon(1e-12));
  const double d1 = 50.0 / (100.0 * (1.0 - rho));
  CHECK(corr.mu1_d == doctest::Approx(d1).epsilon(1e-12));
  CHECK(corr.mu2_d == doctest::Approx(base - d1).epsilon(1e-12));

  // Equal sizes and priors: corrected threshold IS the naive one.
  CHECK(corr.t_star == corr.t_naive);
  CHECK(corr.t_naive == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("corrections recover the true Mahalanobis distance as rho -> 0") {
  const Eigen::Index p = 2, n = 10000;
  std::mt19937_64 eng = make_engine(81, 0, Stream::misc);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd y1(n, p), y2(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) {
      y1(i, j) = normal(eng);
      y2(i, j) = normal(eng) + (j == 0 ? 1.0 : 0.0);
    }
  }
  const LdaCorrections corr = lda_corrections(lda_stats_from_data(y1, y2, 0.5));
  CHECK(std::abs(corr.maha_hat - 1.0) <= 0.05);
}

TEST_CASE("corrections reject groups whose corrected projections coincide") {
  // The corrected gap is base - (d1 + d2); placing the raw distance exactly at
  // the bias term drives it below the 1e-12 floor.
  const Eigen::Index p = 4;
  const double shrink = 1.0 - 4.0 / 38.0;
  const double bias_gap = 4.0 / (20.0 * shrink) + 4.0 / (20.0 * shrink);
  const Eigen::VectorXd m1 = Eigen::VectorXd::Zero(p);
  const Eigen::VectorXd m2 = std::sqrt(bias_gap) * Eigen::VectorXd::Unit(p, 0);
  const LdaStats stats(m1, m2, SymMatrixXd::identity(p), 20, 20, 0.5, 0.5);
  CHECK_THROWS_AS(lda_corrections(stats), numerical_error);

  // Identical raw means are not the degenerate direction: the bias corrections
  // push the projections apart, so the sweep still returns a row.
  const Eigen::VectorXd m = Eigen::VectorXd::Ones(p);
  const LdaCorrections flipped = lda_corrections(LdaStats(m, m, SymMatrixXd::identity(p), 20, 20, 0.5, 0.5));
  CHECK(flipped.mu2_d < flipped.mu1_d);
  CHECK(flipped.maha_hat < 0.0);
}

TEST_CASE("gaussian misclassification rate") {
  CHECK(lda_misclassification(0.7, 0.7, 1.0, 0.3, 0.5) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(lda_misclassification(-1.0, 1.0, 1.0, -1e9, 0.37) ==
        doctest::Approx(0.37).epsilon(1e-12));
  CHECK(lda_misclassification(-1.0, 1.0, 1.0, 0.0, 0.5) ==
        doctest::Approx(phi_cdf(-1.0)).epsilon(1e-12));
  CHECK(phi_cdf(-1.0) == doctest::Approx(0.15865525393145707).epsilon(1e-14));
  CHECK_THROWS_AS(lda_misclassification(0.0, 1.0, 0.0, 0.5, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(lda_misclassification(0.0, 1.0, 1.0, 0.5, 1.0), std::invalid_argument);
}

TEST_CASE("scale-aware rule: prior and threshold algebra") {
  const Eigen::Index p = 6;
  const Eigen::VectorXd d = unit_vector(p, 91);
  const Eigen::VectorXd y = 2.0 * unit_vector(p, 92);
  const double cross = 0.2;

  // Equal priors: the log term vanishes for any radial proxy.
  const bool base = y.dot(d) >= cross;
  CHECK(elliptical_threshold(y, d, 1.0, 0.5, 0.5, cross) == base);
  CHECK(elliptical_threshold(y, d, 7.3, 0.5, 0.5, cross) == base);

  // Unequal priors: a large enough radial proxy flips the decision.
  const double margin = y.dot(d) - cross;
  const double log_ratio = std::log(0.7 / 0.3);
  if (margin > 0.0) {
    CHECK(elliptical_threshold(y, d, 0.5 * margin / log_ratio, 0.7, 0.3, cross));
    CHECK_FALSE(elliptical_threshold(y, d, 2.0 * margin / log_ratio, 0.7, 0.3, cross));
  }
  CHECK_THROWS_AS(elliptical_threshold(Eigen::VectorXd::Ones(p + 1), d, 1.0, 0.5, 0.5, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(elliptical_threshold(y, d, 1.0, 0.0, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("scale-aware rule beats the fixed rule under a heavy radial mixture") {
  // R^2 ~ InvGamma(3, 2), E R^2 = 1; group gap e1, Sigma = Id, pi1 = 0.7.
  const Eigen::Index p = 50;
  const long n_test = 20000;
  const double pi1 = 0.7, delta = 1.0;
  const double cross = delta * delta / 2.0;
  const double log_ratio = std::log(pi1 / (1.0 - pi1));
  const Eigen::VectorXd d = delta * Eigen::VectorXd::Unit(p, 0);

  std::mt19937_64 eng = make_engine(93, 0, Stream::misc);
  std::normal_distribution<double> normal;
  std::gamma_distribution<double> gamma_draw(3.0, 0.5);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  long err_corrected = 0, err_naive = 0;
  for (long i = 0; i < n_test; ++i) {
    const bool in_group2 = unif(eng) > pi1;
    const double r = std::sqrt(1.0 / gamma_draw(eng));
    Eigen::VectorXd y(p);
    for (Eigen::Index j = 0; j < p; ++j) y(j) = r * normal(eng);
    if (in_group2) y(0) += delta;

    const double alpha_hat = y.squaredNorm() / static_cast<double>(p);
    const bool to2_corrected = elliptical_threshold(y, d, alpha_hat, pi1, 1.0 - pi1, cross);
    const bool to2_naive = y.dot(d) >= log_ratio + cross;
    if (to2_corrected != in_group2) ++err_corrected;
    if (to2_naive != in_group2) ++err_naive;
  }
  CHECK(err_corrected <= err_naive);
}

TEST_CASE("mixture misclassification quadrature") {
  const double mu1 = -1.0, mu2 = 1.0, sigma = 1.2, t = 0.1, pi1 = 0.45;
  const double gaussian = lda_misclassification(mu1, mu2, sigma, t, pi1);

  const QuadratureValue point =
      elliptical_misclassification(RadialDensity::atoms(Eigen::VectorXd::Ones(1),
                                                        Eigen::VectorXd::Ones(1)),
                                   mu1, mu2, sigma, t, pi1);
  CHECK(point.value == doctest::Approx(gaussian).epsilon(1e-14));
  CHECK(point.error_estimate == 0.0);

  Eigen::VectorXd r2(2), w2(2);
  r2 << 0.5, 2.0;
  w2 << 0.5, 0.5;
  const QuadratureValue two =
      elliptical_misclassification(RadialDensity::atoms(r2, w2), mu1, mu2, sigma, t, pi1);
  const double want = 0.5 * lda_misclassification(mu1, mu2, sigma * 0.5, t, pi1) +
                      0.5 * lda_misclassification(mu1, mu2, sigma * 2.0, t, pi1);
  CHECK(two.value == doctest::Approx(want).epsilon(1e-14));

  // Uniform density on [0.5, 1.5] through Simpson: two resolutions agree.
  const auto uniform_grid = [&](Eigen::Index points) {
    Eigen::VectorXd r(points), f(points);
    for (Eigen::Index i = 0; i < points; ++i) {
      r(i) = 0.5 + static_cast<double>(i) / static_cast<double>(points - 1);
      f(i) = 1.0;
    }
    return elliptical_misclassification(RadialDensity::grid(r, f), mu1, mu2, sigma, t, pi1);
  };
  const QuadratureValue coarse = uniform_grid(101);
  const QuadratureValue fine = uniform_grid(401);
  CHECK(std::abs(coarse.value - fine.value) <= 1e-8);
  CHECK(fine.error_estimate <= coarse.error_estimate + 1e-15);

  CHECK_THROWS_AS(RadialDensity::atoms(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1)),
                  std::invalid_argument);
  Eigen::VectorXd bad_w(2);
  bad_w << 0.7, 0.7;
  CHECK_THROWS_AS(RadialDensity::atoms(r2, bad_w), std::invalid_argument);
  Eigen::VectorXd r3(3), f3(3);
  r3 << 0.5, 1.0, 1.5;
  f3 << 2.0, 2.0, 2.0;  // integrates to 2
  CHECK_THROWS_AS(RadialDensity::grid(r3, f3), std::invalid_argument);
  const Eigen::VectorXd r4 = Eigen::VectorXd::LinSpaced(4, 0.5, 1.1);
  CHECK_THROWS_AS(RadialDensity::grid(r4, Eigen::VectorXd::Ones(4)), std::invalid_argument);
}

TEST_CASE("blend sweep: endpoint delegation and grid handling") {
  const Eigen::Index p = 20;
  std::mt19937_64 eng = make_engine(101, 0, Stream::misc);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd y1(60, p), y2(40, p);
  for (Eigen::Index i = 0; i < 60; ++i)
    for (Eigen::Index j = 0; j < p; ++j) y1(i, j) = normal(eng);
  for (Eigen::Index i = 0; i < 40; ++i)
    for (Eigen::Index j = 0; j < p; ++j) y2(i, j) = normal(eng) + (j == 0 ? 1.5 : 0.0);
  const LdaStats stats = lda_stats_from_data(y1, y2, 0.55);
  const LdaCorrections corr = lda_corrections(stats);

  Eigen::VectorXd grid(3);
  grid << 0.0, 0.3, 0.6;
  const std::vector<RdaRow> rows = rda_sweep(stats, SymMatrixXd::identity(p), grid);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].w == 0.0);
  CHECK(rows[0].mu1_d == corr.mu1_d);
  CHECK(rows[0].mu2_d == corr.mu2_d);
  CHECK(rows[0].sigma2_d == corr.sigma2_d);
  CHECK(rows[0].t_star == corr.t_star);
  CHECK(rows[0].t_naive == corr.t_naive);
  CHECK(rows[0].rate_star ==
        doctest::Approx(lda_misclassification(corr.mu1_d, corr.mu2_d, std::sqrt(corr.sigma2_d),
                                              corr.t_star, stats.pi1()))
            .epsilon(1e-14));
  for (const RdaRow& row : rows) {
    CHECK(row.sigma2_d > 0.0);
    CHECK(row.rate_star > 0.0);
    CHECK(row.rate_star < 1.0);
  }

  const std::vector<RdaRow> single =
      rda_sweep(stats, SymMatrixXd::identity(p), Eigen::VectorXd::Zero(1));
  CHECK(single.size() == 1);

  Eigen::VectorXd bad(1);
  bad << 1.0;
  CHECK_THROWS_AS(rda_sweep(stats, SymMatrixXd::identity(p), bad), std::invalid_argument);
  bad << -0.1;
  CHECK_THROWS_AS(rda_sweep(stats, SymMatrixXd::identity(p), bad), std::invalid_argument);

  Eigen::VectorXd semidef(p);
  semidef.setOnes();
  semidef(0) = 0.0;
  Eigen::VectorXd w_half(1);
  w_half << 0.5;
  CHECK_THROWS_AS(rda_sweep(stats, SymMatrixXd::diagonal(semidef), w_half),
                  std::invalid_argument);
  // The same degenerate target is fine when only w = 0 is requested.
  CHECK_NOTHROW(rda_sweep(stats, SymMatrixXd::diagonal(semidef), Eigen::VectorXd::Zero(1)));
}

TEST_CASE("blend sweep predicts held-out error at w = 0.5 within 0.01") {
  // One training draw carries O(1/sqrt(n)) resolvent fluctuation that no
  // prediction can see, so the gate is on the gap averaged over draws.
  const Eigen::Index p = 50, n_train = 200;
  const double delta = 2.0, pi1 = 0.5, w = 0.5;
  const int draws = 10;
  double gap_sum = 0.0;
  for (int draw = 0; draw < draws; ++draw) {
    std::mt19937_64 eng = make_engine(103, static_cast<std::uint64_t>(draw), Stream::misc);
    std::normal_distribution<double> normal;
    Eigen::MatrixXd y1(n_train, p), y2(n_train, p);
    for (Eigen::Index i = 0; i < n_train; ++i)
      for (Eigen::Index j = 0; j < p; ++j) {
        y1(i, j) = normal(eng);
        y2(i, j) = normal(eng) + (j == 0 ? delta : 0.0);
      }
    const LdaStats stats = lda_stats_from_data(y1, y2, pi1);
    Eigen::VectorXd grid(1);
    grid << w;
    const RdaRow row = rda_sweep(stats, SymMatrixXd::identity(p), grid).at(0);

    // Held-out rule: project on ((1-w) Sigmahat + w Id)^-1 Dhat, cut at t_star.
    const Eigen::MatrixXd blended =
        (1.0 - w) * stats.sigmahat().mat() + w * Eigen::MatrixXd::Identity(p, p);
    const Eigen::VectorXd d_data =
        SymSolver<double>(blended).solve(Eigen::VectorXd(stats.muhat2() - stats.muhat1()));

    const long n_test = 20000;
    long errors = 0;
    for (long i = 0; i < n_test; ++i) {
      const bool in_group2 = (i % 2) == 1;
      Eigen::VectorXd y(p);
      for (Eigen::Index j = 0; j < p; ++j) y(j) = normal(eng);
      if (in_group2) y(0) += delta;
      const bool to2 = y.dot(d_data) >= row.t_star;
      if (to2 != in_group2) ++errors;
    }
    const double empirical = static_cast<double>(errors) / static_cast<double>(n_test);
    gap_sum += empirical - row.rate_star;
  }
  CHECK(std::abs(gap_sum / draws) <= 0.01);
}

TEST_CASE("portfolio risks: exact coincidences and guards") {
  const Eigen::Index p = 6, k = 2;
  const SymMatrixXd sigma = random_psd(p, 111, 0.4);
  const Eigen::MatrixXd v = random_matrix(p, k, 112);
  Eigen::VectorXd u(k);
  u << 1.0, -0.5;

  // A = Sigma with gamma = xi = 0: estimated problem IS the population one.
  const PortfolioProblem match(v, u, sigma, ShrinkagePlanXd(sigma, min_eigenvalue(sigma)));
  DetEquivSolution degenerate;
  const PortfolioRisks risks = portfolio_risks(match, degenerate, 0.0);
  CHECK(risks.w_hat_risk_naive == doctest::Approx(risks.w_opt_risk).epsilon(1e-10));
  CHECK(risks.w_hat_risk_realized == doctest::Approx(risks.w_opt_risk).epsilon(1e-10));

  // gamma = 0 with a generic plan: naive risk is the A-only value.
  const ShrinkagePlanXd plan(random_psd(p, 113, 0.5), 0.3);
  const PortfolioProblem generic(v, u, sigma, plan);
  const PortfolioRisks a_only = portfolio_risks(generic, degenerate, 0.0);
  const Eigen::MatrixXd gram = v.transpose() * SymSolver<double>(plan.A()).solve(v);
  const double naive_want = u.dot(Eigen::MatrixXd(gram).llt().solve(u));
  CHECK(a_only.w_hat_risk_naive == doctest::Approx(naive_want).epsilon(1e-10));
  CHECK(a_only.w_hat_risk_realized >= a_only.w_opt_risk - 1e-10);

  CHECK_THROWS_AS(PortfolioProblem(Eigen::MatrixXd::Zero(p, 2), u, sigma, plan),
                  std::invalid_argument);
  CHECK_THROWS_AS(PortfolioProblem(v, Eigen::VectorXd::Ones(3), sigma, plan),
                  std::invalid_argument);
  CHECK_THROWS_AS(PortfolioProblem(random_matrix(p, 11, 114), Eigen::VectorXd::Ones(11),
                                   sigma, plan),
                  std::invalid_argument);
}

TEST_CASE("portfolio realized risk matches resampled minimum-variance weights") {
  const Eigen::Index p = 100, n = 400, reps = 60;
  const Eigen::VectorXd q = unit_vector(p, 121);
  const SymMatrixXd sigma(Eigen::MatrixXd::Identity(p, p) + 0.5 * q * q.transpose(), 1e-10);
  const ShrinkagePlanXd plan(SymMatrixXd::scaled_identity(p, 0.5), 0.5);
  const Eigen::MatrixXd v = Eigen::MatrixXd::Ones(p, 1);
  const Eigen::VectorXd u = Eigen::VectorXd::Ones(1);
  const PortfolioProblem prob(v, u, sigma, plan);

  const Eigen::VectorXd r = Eigen::VectorXd::Ones(n);
  const DetEquivSolution sol = solve_alpha_gamma(sigma, plan, r, n);
  const double xi = solve_xi(sigma, plan, sigma, r, n, sol);
  const PortfolioRisks risks = portfolio_risks(prob, sol, xi);
  CHECK(risks.w_hat_risk_realized >= risks.w_opt_risk - 1e-10);

  Eigen::VectorXd realized(reps);
  for (Eigen::Index rep = 0; rep < reps; ++rep) {
    const DesignSample sample = gaussian_sample(sigma, n, 122, rep);
    const SymSolver<double> solver(
        Eigen::MatrixXd(sample.S.mat() + plan.A().mat()));
    const Eigen::VectorXd sv = solver.solve(Eigen::VectorXd(v.col(0)));
    const Eigen::VectorXd w_hat = sv * (u(0) / v.col(0).dot(sv));
    realized(rep) = w_hat.dot(sigma.mat() * w_hat);
    CHECK(realized(rep) >= risks.w_opt_risk - 1e-10);
  }
  const double mean = realized.mean();
  const double se = std::sqrt((realized.array() - mean).square().sum() /
                              (reps - 1.0) / static_cast<double>(reps));
  CHECK(std::abs(mean - risks.w_hat_risk_realized) <=
        3.0 * se + 0.03 * risks.w_hat_risk_realized);
}

TEST_CASE("ridge risk: trivial zero, scalar formula, trace identity") {
  {
    const Eigen::MatrixXd x = random_matrix(6, 3, 131);
    const RidgeProblem prob(x, SymMatrixXd::identity(3), 0.5, Eigen::VectorXd::Zero(3),
                            SymMatrixXd::zero(6));
    const RidgeRisk risk = ridge_risk(prob);
    CHECK(risk.total == 0.0);
    CHECK_FALSE(risk.trace_identity.has_value());
  }
  {
    Eigen::MatrixXd x(4, 1);
    x << 0.5, 1.0, 1.5, 2.0;
    const double g = 2.0, lam = 0.7, b0 = 1.3, noise = 0.9;
    const double s = x.col(0).squaredNorm() / 4.0;
    const RidgeProblem prob(x, SymMatrixXd::scaled_identity(1, g), lam,
                            Eigen::VectorXd::Constant(1, b0),
                            SymMatrixXd::scaled_identity(4, noise));
    const RidgeRisk risk = ridge_risk(prob);
    const double denom = (s + lam * g) * (s + lam * g);
    CHECK(risk.bias2 == doctest::Approx(lam * lam * g * g * b0 * b0 / denom).epsilon(1e-12));
    CHECK(risk.variance == doctest::Approx(s * noise / (4.0 * denom)).epsilon(1e-12));
    CHECK(risk.total == doctest::Approx(risk.bias2 + risk.variance).epsilon(1e-14));
    CHECK_FALSE(risk.trace_identity.has_value());
  }
  {
    const Eigen::Index n = 30, p = 8;
    const Eigen::MatrixXd x = random_matrix(n, p, 132);
    const RidgeProblem prob(x, random_psd(p, 133, 0.2), 0.4, unit_vector(p, 134),
                            SymMatrixXd::identity(n));
    const RidgeRisk risk = ridge_risk(prob);
    REQUIRE(risk.trace_identity.has_value());
    CHECK(std::abs(*risk.trace_identity - risk.variance) <= 1e-10);

    // Dense cross-check of both displayed terms.
    const Eigen::MatrixXd k =
        x.transpose() * x / static_cast<double>(n) + 0.4 * prob.Gamma().mat();
    const Eigen::MatrixXd k_inv = k.inverse();
    const Eigen::VectorXd gb = prob.Gamma().mat() * prob.beta0();
    CHECK(risk.bias2 ==
          doctest::Approx(0.4 * 0.4 * (k_inv * gb).squaredNorm()).epsilon(1e-10));
    const Eigen::MatrixXd mid = x.transpose() * x / static_cast<double>(n);
    CHECK(risk.variance ==
          doctest::Approx((k_inv * mid * k_inv).trace() / static_cast<double>(n))
              .epsilon(1e-10));
  }
}

TEST_CASE("ridge risk guards") {
  const Eigen::MatrixXd x = random_matrix(5, 3, 141);
  CHECK_THROWS_AS(RidgeProblem(x, SymMatrixXd::identity(3), 0.0, Eigen::VectorXd::Zero(3),
                               SymMatrixXd::identity(5)),
                  std::invalid_argument);
  Eigen::VectorXd neg(3);
  neg << 1.0, -0.5, 1.0;
  CHECK_THROWS_AS(RidgeProblem(x, SymMatrixXd::diagonal(neg), 0.5, Eigen::VectorXd::Zero(3),
                               SymMatrixXd::identity(5)),
                  std::invalid_argument);
  CHECK_THROWS_AS(RidgeProblem(x, SymMatrixXd::identity(3), 0.5, Eigen::VectorXd::Zero(4),
                               SymMatrixXd::identity(5)),
                  std::invalid_argument);
  CHECK_THROWS_AS(RidgeProblem(x, SymMatrixXd::identity(3), 0.5, Eigen::VectorXd::Zero(3),
                               SymMatrixXd::identity(4)),
                  std::invalid_argument);

  // Rank-deficient Gram with a vanishing penalty cannot be factored.
  const RidgeProblem singular(random_matrix(2, 4, 142), SymMatrixXd::zero(4), 0.5,
                              Eigen::VectorXd::Zero(4), SymMatrixXd::identity(2));
  CHECK_THROWS_AS(ridge_risk(singular), numerical_error);
}
