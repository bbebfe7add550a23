#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <string>

#include "shrinkeq/rng.hpp"
#include "shrinkeq/sym_matrix.hpp"

namespace shrinkeq {

enum class DesignKind {
  gaussian,
  lognormal_centered,
  gaussian_copula_centered,
  sphere_uniform,
  bounded_iid,
};

enum class BoundedEntryLaw { uniform, rademacher };

// Symmetric PSD square root Q diag(sqrt(lambda)) Q'. Eigenvalues below
// -1e-10 * max|lambda| are rejected; smaller negatives are clamped to zero.
Eigen::MatrixXd psd_sqrt(const SymMatrixXd& m);

// Row distribution for the design vectors X_i. Every variant knows its exact
// population covariance sigma_eff, which is what the invariance experiments
// match between families. Construction precomputes the sampling transform, so
// sampling is const and safe to share across threads.
class DesignDistribution {
 public:
  static DesignDistribution gaussian(SymMatrixXd sigma);
  // Entrywise exp of a Gaussian, shifted to mean zero.
  static DesignDistribution lognormal_centered(Eigen::VectorXd mu_tilde, SymMatrixXd sigma_tilde);
  // Phi(Z_i) - 1/2 for a correlated Gaussian Z; r_corr needs a unit diagonal.
  static DesignDistribution gaussian_copula_centered(SymMatrixXd r_corr);
  // sqrt(p) * uniform direction, pushed through the square root of sigma.
  static DesignDistribution sphere_uniform(SymMatrixXd sigma);
  // iid bounded entries (variance one), pushed through the square root of sigma.
  static DesignDistribution bounded_iid(SymMatrixXd sigma,
                                        BoundedEntryLaw law = BoundedEntryLaw::uniform);

  DesignKind kind() const { return kind_; }
  Eigen::Index p() const { return p_; }
  const SymMatrixXd& sigma_eff() const { return sigma_eff_; }
  std::string name() const;

  // The same family at twice the dimension: two independent copies side by
  // side, so every parameter matrix becomes block-diagonal and sigma_eff is
  // the direct sum. Lets experiments grow n and p at a fixed aspect ratio.
  DesignDistribution doubled() const;

  // The strided Ref lets rows of a column-major matrix bind without a copy.
  using RowRef = Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>>;
  void sample_row(std::mt19937_64& engine, RowRef out) const;

 private:
  DesignDistribution() = default;

  DesignKind kind_ = DesignKind::gaussian;
  Eigen::Index p_ = 0;
  SymMatrixXd sigma_eff_;
  Eigen::MatrixXd transform_;
  Eigen::VectorXd mu_tilde_;
  Eigen::VectorXd lognormal_mean_;
  BoundedEntryLaw entry_law_ = BoundedEntryLaw::uniform;
};

// Law of the nonnegative radial factors R_i. second_moment() is the exact
// E R^2 (for the deterministic law, the average of the stored squares).
class RadialLaw {
 public:
  enum class Kind { deterministic, constant_one, pareto };

  static RadialLaw deterministic(Eigen::VectorXd r);
  static RadialLaw constant_one();
  // Pareto with the given tail index (> 2), scaled so that E R^2 = 1.
  static RadialLaw pareto(double index);

  Kind kind() const { return kind_; }
  double second_moment() const { return second_moment_; }
  double pareto_index() const { return pareto_index_; }
  const Eigen::VectorXd& values() const { return values_; }
  std::string name() const;

  // Radial vector for one replication. Deterministic laws tile their stored
  // values, so n must be a multiple of the stored length (experiments that
  // double n keep the same weight pattern); iid laws draw from the radial
  // stream.
  Eigen::VectorXd realize(Eigen::Index n, std::uint64_t seed, std::uint64_t replication) const;

 private:
  RadialLaw() = default;

  Kind kind_ = Kind::constant_one;
  double second_moment_ = 1.0;
  double pareto_index_ = 0.0;
  double pareto_scale_ = 0.0;
  Eigen::VectorXd values_;
};

// One generated design: rows of X are the centered design vectors, R the
// radial factors, and S the weighted second-moment matrix (1/n) X'diag(R)^2 X.
struct DesignSample {
  Eigen::MatrixXd X;
  Eigen::VectorXd R;
  Eigen::VectorXd mu;
  SymMatrixXd S;
  Eigen::Index n = 0;
  Eigen::Index p = 0;
};

DesignSample sample_design(const DesignDistribution& dist, const RadialLaw& radial,
                           const Eigen::VectorXd& mu, Eigen::Index n, std::uint64_t seed,
                           std::uint64_t replication = 0, Stream design_stream = Stream::design);

// (1/n) X'diag(r)^2 X via a rank update on the lower triangle.
SymMatrixXd weighted_second_moment(const Eigen::MatrixXd& x, const Eigen::VectorXd& r);

// Wraps externally supplied data (rows of x, radial factors r) as a
// DesignSample with mu = 0 and the weighted second-moment matrix filled in.
DesignSample design_sample_from_data(Eigen::MatrixXd x, Eigen::VectorXd r);

// Log-normal parameters (mu_tilde = 0) whose centered exponential has exactly
// the target covariance. Solves the diagonal first, then the off-diagonal
// log identity; infeasible targets (nonpositive log argument, non-PSD result)
// are rejected.
SymMatrixXd lognormal_matching(const SymMatrixXd& sigma_eff_target);

// Observations mu + R_i X_i, one CSV row each.
void write_sample_csv(const std::string& path, const DesignSample& sample);

}  // namespace shrinkeq
