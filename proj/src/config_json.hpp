#pragma once

// Private JSON plumbing shared by the CLI: config parsing into library
// types, report serialization, and the config hash. Paths inside configs are
// resolved relative to the config file's directory.

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "shrinkeq/design.hpp"
#include "shrinkeq/lda.hpp"
#include "shrinkeq/mc.hpp"
#include "shrinkeq/moment_bounds.hpp"
#include "shrinkeq/portfolio.hpp"
#include "shrinkeq/ridge.hpp"
#include "shrinkeq/sym_matrix.hpp"

namespace shrinkeq::cfgjson {

using nlohmann::json;

json load_json_file(const std::string& path);

// Canonical text: sorted keys (nlohmann's default object order), two-space
// indent, shortest round-trip floats. The hash and all written JSON use it.
std::string canonical_dump(const json& j);

std::uint64_t fnv1a64(std::string_view text);
std::string config_hash(const json& resolved_config);  // "fnv1a64:" + 16 hex digits

// what names the field in error messages. Vector specs: a plain array,
// {"kind":"unit","dim":p,"index":i}, {"kind":"constant","dim":n,"value":v},
// or {"kind":"csv","path":...} (single row or column).
Eigen::VectorXd parse_vector(const json& j, const std::string& what,
                             const std::filesystem::path& base_dir);

// Matrix specs: {"kind":"identity"|"scaled_identity","dim":p[,"scale":s]},
// {"kind":"diagonal","values":[...]}, {"kind":"dense","rows":[[...],...]},
// {"kind":"csv"|"binary","path":...}.
Eigen::MatrixXd parse_dense_matrix(const json& j, const std::string& what,
                                   const std::filesystem::path& base_dir);
SymMatrixXd parse_sym_matrix(const json& j, const std::string& what,
                             const std::filesystem::path& base_dir);

// {"a": <matrix>, "t_floor": t}; t_floor defaults to the smallest eigenvalue
// of a, which must then be positive.
ShrinkagePlanXd parse_plan(const json& j, const std::string& what,
                           const std::filesystem::path& base_dir);

// {"family": "gaussian"|"lognormal_centered"|"lognormal_matched"|
//  "gaussian_copula"|"sphere_uniform"|"bounded_iid", ...}.
DesignDistribution parse_design(const json& j, const std::string& what,
                                const std::filesystem::path& base_dir);

// {"law": "constant_one"} | {"law":"deterministic","values":<vector>} |
// {"law":"pareto","index":a}.
RadialLaw parse_radial(const json& j, const std::string& what,
                       const std::filesystem::path& base_dir);

// {"bL": {"2": v, ...}, "bQ2": {...}, "provenance": "analytic"|"monte_carlo"}.
ConcentrationConstants parse_constants(const json& j, const std::string& what);

// Shared by verify and stieltjes; seed/threads already resolved by caller.
ExperimentConfig parse_experiment(const json& j, const std::filesystem::path& base_dir,
                                  std::uint64_t seed, int threads);

// Dimension-scalable templates for the rate experiment: matrix kinds are
// restricted to identity/scaled_identity so a factory can instantiate any p.
RateConfig parse_rate(const json& j, const std::filesystem::path& base_dir, std::uint64_t seed,
                      int threads);

json experiment_report_json(const ExperimentReport& rep);
json rate_report_json(const RateReport& rep);
json stieltjes_report_json(const StieltjesReport& rep);
json rda_rows_json(const std::vector<RdaRow>& rows);

}  // namespace shrinkeq::cfgjson
