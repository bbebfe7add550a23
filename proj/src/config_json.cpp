#include "config_json.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <utility>
#include <vector>

#include "shrinkeq/matrix_io.hpp"

namespace shrinkeq::cfgjson {

namespace {

const json& field(const json& j, const std::string& key, const std::string& what) {
  if (!j.is_object()) throw std::invalid_argument(what + ": expected a JSON object");
  const auto it = j.find(key);
  if (it == j.end()) throw std::invalid_argument(what + ": missing field \"" + key + "\"");
  return *it;
}

double number(const json& j, const std::string& what) {
  if (!j.is_number()) throw std::invalid_argument(what + ": expected a number");
  return j.get<double>();
}

long long integer(const json& j, const std::string& what) {
  if (!j.is_number_integer()) throw std::invalid_argument(what + ": expected an integer");
  return j.get<long long>();
}

std::string text(const json& j, const std::string& what) {
  if (!j.is_string()) throw std::invalid_argument(what + ": expected a string");
  return j.get<std::string>();
}

std::string resolve_path(const json& j, const std::string& what,
                         const std::filesystem::path& base_dir) {
  const std::filesystem::path raw(text(j, what + ".path"));
  if (raw.is_absolute()) return raw.string();
  return (base_dir / raw).string();
}

}  // namespace

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config file " + path + " is not valid JSON: " + e.what());
  }
}

std::string canonical_dump(const json& j) { return j.dump(2); }

std::uint64_t fnv1a64(std::string_view textv) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const unsigned char c : textv) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string config_hash(const json& resolved_config) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical_dump(resolved_config))));
  return std::string("fnv1a64:") + buf;
}

Eigen::VectorXd parse_vector(const json& j, const std::string& what,
                             const std::filesystem::path& base_dir) {
  if (j.is_array()) {
    Eigen::VectorXd v(j.size());
    Eigen::Index i = 0;
    for (const auto& entry : j) v(i++) = number(entry, what + " entry");
    return v;
  }
  const std::string kind = text(field(j, "kind", what), what + ".kind");
  if (kind == "unit") {
    const long long dim = integer(field(j, "dim", what), what + ".dim");
    const long long index = j.contains("index") ? integer(j["index"], what + ".index") : 0;
    if (dim < 1 || index < 0 || index >= dim) {
      throw std::invalid_argument(what + ": unit vector needs 0 <= index < dim");
    }
    return Eigen::VectorXd::Unit(dim, index);
  }
  if (kind == "constant") {
    const long long dim = integer(field(j, "dim", what), what + ".dim");
    if (dim < 1) throw std::invalid_argument(what + ": constant vector needs dim >= 1");
    return Eigen::VectorXd::Constant(dim, number(field(j, "value", what), what + ".value"));
  }
  if (kind == "csv") {
    const Eigen::MatrixXd m = read_matrix_csv(resolve_path(field(j, "path", what), what, base_dir));
    if (m.cols() == 1) return m.col(0);
    if (m.rows() == 1) return m.row(0).transpose();
    throw std::invalid_argument(what + ": CSV vector must be a single row or column, got " +
                                std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
  throw std::invalid_argument(what + ": unknown vector kind \"" + kind + "\"");
}

Eigen::MatrixXd parse_dense_matrix(const json& j, const std::string& what,
                                   const std::filesystem::path& base_dir) {
  const std::string kind = text(field(j, "kind", what), what + ".kind");
  if (kind == "identity" || kind == "scaled_identity") {
    const long long dim = integer(field(j, "dim", what), what + ".dim");
    if (dim < 1) throw std::invalid_argument(what + ": dim must be >= 1");
    const double scale =
        kind == "identity" ? 1.0 : number(field(j, "scale", what), what + ".scale");
    return scale * Eigen::MatrixXd::Identity(dim, dim);
  }
  if (kind == "diagonal") {
    const Eigen::VectorXd values = parse_vector(field(j, "values", what), what + ".values",
                                                base_dir);
    return values.asDiagonal();
  }
  if (kind == "dense") {
    const json& rows = field(j, "rows", what);
    if (!rows.is_array() || rows.empty()) {
      throw std::invalid_argument(what + ".rows: expected a nonempty array of arrays");
    }
    const Eigen::Index nrows = static_cast<Eigen::Index>(rows.size());
    Eigen::Index ncols = -1;
    Eigen::MatrixXd m;
    for (Eigen::Index r = 0; r < nrows; ++r) {
      const json& row = rows[static_cast<std::size_t>(r)];
      if (!row.is_array()) throw std::invalid_argument(what + ".rows: expected arrays");
      if (ncols < 0) {
        ncols = static_cast<Eigen::Index>(row.size());
        if (ncols < 1) throw std::invalid_argument(what + ".rows: empty row");
        m.resize(nrows, ncols);
      } else if (static_cast<Eigen::Index>(row.size()) != ncols) {
        throw std::invalid_argument(what + ".rows: ragged row lengths");
      }
      for (Eigen::Index c = 0; c < ncols; ++c) {
        m(r, c) = number(row[static_cast<std::size_t>(c)], what + " entry");
      }
    }
    return m;
  }
  if (kind == "csv") {
    return read_matrix_csv(resolve_path(field(j, "path", what), what, base_dir));
  }
  if (kind == "binary") {
    return read_matrix_binary(resolve_path(field(j, "path", what), what, base_dir));
  }
  throw std::invalid_argument(what + ": unknown matrix kind \"" + kind + "\"");
}

SymMatrixXd parse_sym_matrix(const json& j, const std::string& what,
                             const std::filesystem::path& base_dir) {
  return SymMatrixXd(parse_dense_matrix(j, what, base_dir));
}

ShrinkagePlanXd parse_plan(const json& j, const std::string& what,
                           const std::filesystem::path& base_dir) {
  SymMatrixXd a = parse_sym_matrix(field(j, "a", what), what + ".a", base_dir);
  const double t_floor = j.contains("t_floor") ? number(j["t_floor"], what + ".t_floor")
                                               : min_eigenvalue(a);
  return ShrinkagePlanXd(std::move(a), t_floor);
}

DesignDistribution parse_design(const json& j, const std::string& what,
                                const std::filesystem::path& base_dir) {
  const std::string family = text(field(j, "family", what), what + ".family");
  if (family == "gaussian") {
    return DesignDistribution::gaussian(
        parse_sym_matrix(field(j, "sigma", what), what + ".sigma", base_dir));
  }
  if (family == "lognormal_centered") {
    SymMatrixXd sigma_tilde =
        parse_sym_matrix(field(j, "sigma_tilde", what), what + ".sigma_tilde", base_dir);
    Eigen::VectorXd mu_tilde =
        j.contains("mu_tilde")
            ? parse_vector(j["mu_tilde"], what + ".mu_tilde", base_dir)
            : Eigen::VectorXd::Zero(sigma_tilde.dim()).eval();
    return DesignDistribution::lognormal_centered(std::move(mu_tilde), std::move(sigma_tilde));
  }
  if (family == "lognormal_matched") {
    const SymMatrixXd target =
        parse_sym_matrix(field(j, "sigma", what), what + ".sigma", base_dir);
    SymMatrixXd sigma_tilde = lognormal_matching(target);
    return DesignDistribution::lognormal_centered(Eigen::VectorXd::Zero(target.dim()),
                                                  std::move(sigma_tilde));
  }
  if (family == "gaussian_copula") {
    return DesignDistribution::gaussian_copula_centered(
        parse_sym_matrix(field(j, "r_corr", what), what + ".r_corr", base_dir));
  }
  if (family == "sphere_uniform") {
    return DesignDistribution::sphere_uniform(
        parse_sym_matrix(field(j, "sigma", what), what + ".sigma", base_dir));
  }
  if (family == "bounded_iid") {
    BoundedEntryLaw law = BoundedEntryLaw::uniform;
    if (j.contains("entry_law")) {
      const std::string name = text(j["entry_law"], what + ".entry_law");
      if (name == "uniform") {
        law = BoundedEntryLaw::uniform;
      } else if (name == "rademacher") {
        law = BoundedEntryLaw::rademacher;
      } else {
        throw std::invalid_argument(what + ".entry_law: unknown law \"" + name + "\"");
      }
    }
    return DesignDistribution::bounded_iid(
        parse_sym_matrix(field(j, "sigma", what), what + ".sigma", base_dir), law);
  }
  throw std::invalid_argument(what + ": unknown design family \"" + family + "\"");
}

RadialLaw parse_radial(const json& j, const std::string& what,
                       const std::filesystem::path& base_dir) {
  const std::string law = text(field(j, "law", what), what + ".law");
  if (law == "constant_one") return RadialLaw::constant_one();
  if (law == "deterministic") {
    return RadialLaw::deterministic(
        parse_vector(field(j, "values", what), what + ".values", base_dir));
  }
  if (law == "pareto") {
    return RadialLaw::pareto(number(field(j, "index", what), what + ".index"));
  }
  throw std::invalid_argument(what + ": unknown radial law \"" + law + "\"");
}

ConcentrationConstants parse_constants(const json& j, const std::string& what) {
  const auto parse_orders = [&](const char* key) {
    std::map<int, double> out;
    if (!j.contains(key)) return out;
    const json& block = j[key];
    if (!block.is_object()) throw std::invalid_argument(what + "." + key + ": expected an object");
    for (const auto& [order_text, value] : block.items()) {
      int order = 0;
      try {
        order = std::stoi(order_text);
      } catch (const std::exception&) {
        throw std::invalid_argument(what + "." + key + ": moment order \"" + order_text +
                                    "\" is not an integer");
      }
      out[order] = number(value, what + "." + key + "[" + order_text + "]");
    }
    return out;
  };
  auto provenance = ConcentrationConstants::Provenance::analytic_bound;
  if (j.contains("provenance")) {
    const std::string name = text(j["provenance"], what + ".provenance");
    if (name == "analytic") {
      provenance = ConcentrationConstants::Provenance::analytic_bound;
    } else if (name == "monte_carlo") {
      provenance = ConcentrationConstants::Provenance::monte_carlo_estimate;
    } else {
      throw std::invalid_argument(what + ".provenance: expected \"analytic\" or \"monte_carlo\"");
    }
  }
  return ConcentrationConstants(parse_orders("bL"), parse_orders("bQ2"), provenance);
}

ExperimentConfig parse_experiment(const json& j, const std::filesystem::path& base_dir,
                                  std::uint64_t seed, int threads) {
  ExperimentConfig cfg;
  cfg.form = parse_form_kind(text(field(j, "form", "experiment"), "experiment.form"));
  cfg.dist_x = parse_design(field(j, "dist", "experiment"), "experiment.dist", base_dir);
  if (j.contains("dist_y")) {
    cfg.dist_y = parse_design(j["dist_y"], "experiment.dist_y", base_dir);
  }
  cfg.radial = parse_radial(field(j, "radial", "experiment"), "experiment.radial", base_dir);
  cfg.plan = parse_plan(field(j, "plan", "experiment"), "experiment.plan", base_dir);
  cfg.n = integer(field(j, "n", "experiment"), "experiment.n");
  cfg.replications = integer(field(j, "replications", "experiment"), "experiment.replications");
  cfg.seed = seed;
  cfg.threads = threads;
  if (j.contains("allowance")) cfg.allowance = number(j["allowance"], "experiment.allowance");
  if (j.contains("x")) cfg.x = parse_vector(j["x"], "experiment.x", base_dir);
  if (j.contains("alpha")) cfg.alpha = parse_vector(j["alpha"], "experiment.alpha", base_dir);
  if (j.contains("sigma_eps")) {
    cfg.sigma_eps = parse_sym_matrix(j["sigma_eps"], "experiment.sigma_eps", base_dir);
  }
  if (j.contains("z")) {
    const json& z = j["z"];
    cfg.z = std::complex<double>(number(field(z, "re", "experiment.z"), "experiment.z.re"),
                                 number(field(z, "im", "experiment.z"), "experiment.z.im"));
  }
  if (j.contains("constants")) {
    cfg.constants = parse_constants(j["constants"], "experiment.constants");
  }
  return cfg;
}

namespace {

// Rate templates omit every dimension; inject p into the members that carry
// one, rejecting matrix kinds that cannot scale.
json instantiate_template(json spec, Eigen::Index p, const std::string& what) {
  static const char* matrix_keys[] = {"sigma", "sigma_tilde", "r_corr", "a"};
  for (const char* key : matrix_keys) {
    if (!spec.contains(key)) continue;
    json& m = spec[key];
    const std::string kind = text(field(m, "kind", what), what + ".kind");
    if (kind != "identity" && kind != "scaled_identity") {
      throw std::invalid_argument(what + "." + key +
                                  ": rate templates need a scale-free matrix kind "
                                  "(identity or scaled_identity), got \"" +
                                  kind + "\"");
    }
    m["dim"] = static_cast<long long>(p);
  }
  if (spec.contains("mu_tilde")) {
    json& v = spec["mu_tilde"];
    if (!v.is_object() || text(field(v, "kind", what), what + ".kind") != "constant") {
      throw std::invalid_argument(what + ".mu_tilde: rate templates need a constant vector spec");
    }
    v["dim"] = static_cast<long long>(p);
  }
  return spec;
}

}  // namespace

RateConfig parse_rate(const json& j, const std::filesystem::path& base_dir, std::uint64_t seed,
                      int threads) {
  RateConfig rc;
  rc.form = parse_form_kind(text(field(j, "form", "rate"), "rate.form"));
  rc.radial = parse_radial(field(j, "radial", "rate"), "rate.radial", base_dir);
  rc.ratio = number(field(j, "ratio", "rate"), "rate.ratio");
  const json& grid = field(j, "n_grid", "rate");
  if (!grid.is_array()) throw std::invalid_argument("rate.n_grid: expected an array");
  for (const auto& entry : grid) {
    rc.n_grid.push_back(static_cast<Eigen::Index>(integer(entry, "rate.n_grid entry")));
  }
  rc.replications = integer(field(j, "replications", "rate"), "rate.replications");
  rc.seed = seed;
  rc.threads = threads;
  if (j.contains("eigen_floor")) rc.eigen_floor = number(j["eigen_floor"], "rate.eigen_floor");
  if (j.contains("floor_fraction")) {
    rc.floor_fraction = number(j["floor_fraction"], "rate.floor_fraction");
  }

  const json dist_template = field(j, "dist_template", "rate");
  rc.dist_factory = [dist_template, base_dir](Eigen::Index p) {
    return parse_design(instantiate_template(dist_template, p, "rate.dist_template"),
                        "rate.dist_template", base_dir);
  };
  if (j.contains("dist_template_y")) {
    const json tmpl_y = j["dist_template_y"];
    rc.dist_factory_y = [tmpl_y, base_dir](Eigen::Index p) {
      return parse_design(instantiate_template(tmpl_y, p, "rate.dist_template_y"),
                          "rate.dist_template_y", base_dir);
    };
  }
  const json plan_template = field(j, "plan_template", "rate");
  rc.plan_factory = [plan_template, base_dir](Eigen::Index p) {
    return parse_plan(instantiate_template(plan_template, p, "rate.plan_template"),
                      "rate.plan_template", base_dir);
  };

  // Instantiate once now so template mistakes surface as config errors.
  rc.dist_factory(8);
  rc.plan_factory(8);
  if (rc.dist_factory_y) rc.dist_factory_y(8);
  return rc;
}

json experiment_report_json(const ExperimentReport& rep) {
  json j;
  j["experiment"] = rep.experiment;
  j["form"] = rep.form;
  j["n"] = static_cast<long long>(rep.n);
  j["p"] = static_cast<long long>(rep.p);
  j["replications"] = rep.replications;
  j["seed"] = rep.seed;
  j["mean_x"] = rep.mean_x;
  j["se_x"] = rep.se_x;
  j["var_x"] = rep.var_x;
  if (rep.mean_y) j["mean_y"] = *rep.mean_y;
  if (rep.se_y) j["se_y"] = *rep.se_y;
  if (rep.var_y) j["var_y"] = *rep.var_y;
  if (rep.gap) j["gap"] = *rep.gap;
  if (rep.pooled_se) j["pooled_se"] = *rep.pooled_se;
  if (rep.variance_ratio) j["variance_ratio"] = *rep.variance_ratio;
  if (rep.det_equiv_value) j["det_equiv_value"] = *rep.det_equiv_value;
  if (rep.theorem_bound) j["theorem_bound"] = *rep.theorem_bound;
  if (rep.bound_ratio) j["bound_ratio"] = *rep.bound_ratio;
  j["bound_violations"] = rep.bound_violations;
  j["pass"] = rep.pass;
  j["criterion"] = rep.criterion;
  return j;
}

json rate_report_json(const RateReport& rep) {
  json j;
  j["experiment"] = "rate";
  j["form"] = rep.form;
  j["replications"] = rep.replications;
  j["seed"] = rep.seed;
  j["n_grid"] = json::array();
  for (const Eigen::Index n : rep.n_grid) j["n_grid"].push_back(static_cast<long long>(n));
  j["p_grid"] = json::array();
  for (const Eigen::Index p : rep.p_grid) j["p_grid"].push_back(static_cast<long long>(p));
  j["means"] = rep.means;
  j["variances"] = rep.variances;
  j["se"] = rep.se;
  if (!rep.gap_means.empty()) j["gap_means"] = rep.gap_means;
  if (rep.var_slope) j["var_slope"] = *rep.var_slope;
  if (rep.var_slope_se) j["var_slope_se"] = *rep.var_slope_se;
  if (rep.gap_slope) j["gap_slope"] = *rep.gap_slope;
  j["degenerate"] = rep.degenerate;
  j["pass"] = rep.pass;
  j["criterion"] = rep.criterion;
  return j;
}

json stieltjes_report_json(const StieltjesReport& rep) {
  json j;
  j["experiment"] = "stieltjes";
  j["z"] = {{"re", rep.z.real()}, {"im", rep.z.imag()}};
  j["n"] = static_cast<long long>(rep.n);
  j["p"] = static_cast<long long>(rep.p);
  j["replications"] = rep.replications;
  j["seed"] = rep.seed;
  j["mean_x"] = {{"re", rep.mean_x.real()}, {"im", rep.mean_x.imag()}};
  j["mean_y"] = {{"re", rep.mean_y.real()}, {"im", rep.mean_y.imag()}};
  j["se_x"] = rep.se_x;
  j["se_y"] = rep.se_y;
  j["gap"] = rep.gap;
  j["pooled_se"] = rep.pooled_se;
  j["theorem_bound"] = rep.theorem_bound;
  j["bound_violations"] = rep.bound_violations;
  j["pass"] = rep.pass;
  j["criterion"] = rep.criterion;
  return j;
}

json rda_rows_json(const std::vector<RdaRow>& rows) {
  json arr = json::array();
  for (const RdaRow& row : rows) {
    json j;
    j["w"] = row.w;
    j["alpha"] = row.alpha;
    j["gamma"] = row.gamma;
    j["xi"] = row.xi;
    j["mu1_d"] = row.mu1_d;
    j["mu2_d"] = row.mu2_d;
    j["sigma2_d"] = row.sigma2_d;
    j["t_star"] = row.t_star;
    j["t_naive"] = row.t_naive;
    j["rate_star"] = row.rate_star;
    j["rate_naive"] = row.rate_naive;
    j["sigma2_plugin"] = row.sigma2_plugin;
    j["maha_plugin"] = row.maha_plugin;
    arr.push_back(std::move(j));
  }
  return arr;
}

}  // namespace shrinkeq::cfgjson
