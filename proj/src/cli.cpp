#include "shrinkeq/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "config_json.hpp"
#include "shrinkeq/det_equiv.hpp"
#include "shrinkeq/errors.hpp"
#include "shrinkeq/estimators.hpp"
#include "shrinkeq/matrix_io.hpp"
#include "shrinkeq/version.hpp"

namespace shrinkeq {

namespace fs = std::filesystem;
using cfgjson::json;

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// filename -> CSV body (header line plus data rows); the hash comment line is
// prepended at write time.
using CsvList = std::vector<std::pair<std::string, std::string>>;

std::uint64_t resolve_seed(const json& config, const std::optional<std::uint64_t>& override_seed) {
  if (override_seed) return *override_seed;
  if (!config.contains("seed")) return 0;
  const json& s = config["seed"];
  if (!s.is_number_integer() && !s.is_number_unsigned()) {
    throw std::invalid_argument("config.seed: expected a nonnegative integer");
  }
  if (s.is_number_integer() && s.get<long long>() < 0) {
    throw std::invalid_argument("config.seed: expected a nonnegative integer");
  }
  return s.get<std::uint64_t>();
}

int resolve_threads(const json& config, const std::optional<int>& override_threads) {
  int threads = 0;
  if (override_threads) {
    threads = *override_threads;
  } else if (config.contains("threads")) {
    if (!config["threads"].is_number_integer()) {
      throw std::invalid_argument("config.threads: expected an integer");
    }
    threads = config["threads"].get<int>();
  }
  if (threads < 0) throw std::invalid_argument("config.threads: must be >= 0");
  return threads;
}

double optional_number(json& resolved, const char* key, double fallback) {
  if (!resolved.contains(key)) {
    resolved[key] = fallback;
    return fallback;
  }
  if (!resolved[key].is_number()) {
    throw std::invalid_argument(std::string("config.") + key + ": expected a number");
  }
  return resolved[key].get<double>();
}

json handle_detequiv(json& resolved, const fs::path& base, std::uint64_t seed, CsvList&) {
  const SymMatrixXd sigma = cfgjson::parse_sym_matrix(resolved.at("sigma"), "sigma", base);
  const ShrinkagePlanXd plan = cfgjson::parse_plan(resolved.at("plan"), "plan", base);
  const RadialLaw radial = cfgjson::parse_radial(resolved.at("radial"), "radial", base);
  if (!resolved.contains("n")) throw std::invalid_argument("detequiv: missing field \"n\"");
  const Eigen::Index n = resolved["n"].get<long long>();
  const double tol = optional_number(resolved, "tol", 1e-12);
  resolved["plan"]["t_floor"] = plan.t_floor();

  const Eigen::VectorXd r = radial.realize(n, seed, 0);
  const DetEquivSolution sol = solve_alpha_gamma(sigma, plan, r, n, tol);

  json report;
  report["alpha_bar"] = sol.alpha_bar;
  report["gamma_bar"] = sol.gamma_bar;
  report["residual"] = sol.residual;
  report["iterations"] = sol.iterations;
  report["n"] = static_cast<long long>(n);
  report["p"] = static_cast<long long>(sigma.dim());
  if (resolved.contains("x")) {
    const Eigen::VectorXd x = cfgjson::parse_vector(resolved["x"], "x", base);
    report["quadform"] = det_equiv_quadform(x, sigma, plan, sol);
  }
  if (resolved.contains("xi_target")) {
    const SymMatrixXd b = cfgjson::parse_sym_matrix(resolved["xi_target"], "xi_target", base);
    const double xi = solve_xi(sigma, plan, b, r, n, sol);
    report["xi_bar"] = xi;
    if (resolved.contains("x")) {
      const Eigen::VectorXd x = cfgjson::parse_vector(resolved["x"], "x", base);
      report["sandwich"] = det_equiv_sandwich(x, sigma, plan, b, sol, xi);
    }
  }
  return report;
}

json handle_estimate(json& resolved, const fs::path& base, std::uint64_t seed, CsvList&) {
  const ShrinkagePlanXd plan = cfgjson::parse_plan(resolved.at("plan"), "plan", base);
  resolved["plan"]["t_floor"] = plan.t_floor();
  const double tol = optional_number(resolved, "tol", 1e-10);

  DesignSample sample;
  if (resolved.contains("synthetic")) {
    const json& syn = resolved["synthetic"];
    const DesignDistribution dist = cfgjson::parse_design(syn.at("dist"), "synthetic.dist", base);
    const RadialLaw radial = cfgjson::parse_radial(syn.at("radial"), "synthetic.radial", base);
    const Eigen::Index n = syn.at("n").get<long long>();
    sample = sample_design(dist, radial, Eigen::VectorXd(), n, seed, 0);
  } else {
    const fs::path x_path = base / resolved.at("x_csv").get<std::string>();
    Eigen::MatrixXd x = read_matrix_csv(x_path.string());
    Eigen::VectorXd r;
    if (resolved.contains("r_csv")) {
      const json spec = {{"kind", "csv"}, {"path", resolved["r_csv"].get<std::string>()}};
      r = cfgjson::parse_vector(spec, "r_csv", base);
    } else if (resolved.contains("r")) {
      r = cfgjson::parse_vector(resolved["r"], "r", base);
    } else {
      r = Eigen::VectorXd::Ones(x.rows());
    }
    sample = design_sample_from_data(std::move(x), std::move(r));
  }

  const Eigen::VectorXd v = resolved.contains("v")
                                ? cfgjson::parse_vector(resolved["v"], "v", base)
                                : Eigen::VectorXd::Unit(sample.p, 0).eval();
  const QuadformEstimate est = estimate_population_quadform(v, sample, plan, tol);

  json report;
  report["value"] = est.value;
  report["t0"] = est.t0;
  report["gamma_t0"] = est.gamma_t0;
  report["n"] = static_cast<long long>(sample.n);
  report["p"] = static_cast<long long>(sample.p);
  return report;
}

json lda_stats_json(const LdaStats& stats) {
  json j;
  j["N1"] = static_cast<long long>(stats.N1());
  j["N2"] = static_cast<long long>(stats.N2());
  j["p"] = static_cast<long long>(stats.p());
  j["rho"] = stats.rho();
  j["pi1"] = stats.pi1();
  j["pi2"] = stats.pi2();
  return j;
}

json lda_corrections_json(const LdaCorrections& corr, double pi1) {
  json j;
  j["maha_hat"] = corr.maha_hat;
  j["sigma2_d"] = corr.sigma2_d;
  j["mu1_d"] = corr.mu1_d;
  j["mu2_d"] = corr.mu2_d;
  j["t_star"] = corr.t_star;
  j["t_naive"] = corr.t_naive;
  const double sigma_d = std::sqrt(corr.sigma2_d);
  j["rate_star"] = lda_misclassification(corr.mu1_d, corr.mu2_d, sigma_d, corr.t_star, pi1);
  j["rate_naive"] = lda_misclassification(corr.mu1_d, corr.mu2_d, sigma_d, corr.t_naive, pi1);
  return j;
}

LdaStats load_lda_stats(json& resolved, const fs::path& base) {
  const double pi1 = optional_number(resolved, "pi1", 0.5);
  const fs::path p1 = base / resolved.at("group1_csv").get<std::string>();
  const fs::path p2 = base / resolved.at("group2_csv").get<std::string>();
  return lda_stats_from_csv(p1.string(), p2.string(), pi1);
}

json handle_lda(json& resolved, const fs::path& base, std::uint64_t, CsvList&) {
  const LdaStats stats = load_lda_stats(resolved, base);
  json report = lda_stats_json(stats);
  report.update(lda_corrections_json(lda_corrections(stats), stats.pi1()));
  return report;
}

json handle_rda(json& resolved, const fs::path& base, std::uint64_t, CsvList& csvs) {
  const LdaStats stats = load_lda_stats(resolved, base);
  const SymMatrixXd target = cfgjson::parse_sym_matrix(resolved.at("target"), "target", base);
  const Eigen::VectorXd w_grid = cfgjson::parse_vector(resolved.at("w_grid"), "w_grid", base);
  const std::vector<RdaRow> rows = rda_sweep(stats, target, w_grid);

  json report = lda_stats_json(stats);
  report["rows"] = cfgjson::rda_rows_json(rows);

  std::string csv =
      "w,alpha,gamma,xi,mu1_d,mu2_d,sigma2_d,t_star,t_naive,rate_star,rate_naive,"
      "sigma2_plugin,maha_plugin\n";
  for (const RdaRow& row : rows) {
    csv += fmt17(row.w) + "," + fmt17(row.alpha) + "," + fmt17(row.gamma) + "," + fmt17(row.xi) +
           "," + fmt17(row.mu1_d) + "," + fmt17(row.mu2_d) + "," + fmt17(row.sigma2_d) + "," +
           fmt17(row.t_star) + "," + fmt17(row.t_naive) + "," + fmt17(row.rate_star) + "," +
           fmt17(row.rate_naive) + "," + fmt17(row.sigma2_plugin) + "," + fmt17(row.maha_plugin) +
           "\n";
  }
  csvs.emplace_back("rda_rows.csv", std::move(csv));
  return report;
}

json handle_portfolio(json& resolved, const fs::path& base, std::uint64_t seed, CsvList& csvs) {
  const SymMatrixXd sigma = cfgjson::parse_sym_matrix(resolved.at("sigma"), "sigma", base);
  const ShrinkagePlanXd plan = cfgjson::parse_plan(resolved.at("plan"), "plan", base);
  resolved["plan"]["t_floor"] = plan.t_floor();
  const RadialLaw radial = cfgjson::parse_radial(resolved.at("radial"), "radial", base);
  if (!resolved.contains("n")) throw std::invalid_argument("portfolio: missing field \"n\"");
  const Eigen::Index n = resolved["n"].get<long long>();
  const Eigen::MatrixXd v = cfgjson::parse_dense_matrix(resolved.at("V"), "V", base);
  const Eigen::VectorXd u = cfgjson::parse_vector(resolved.at("U"), "U", base);
  const Eigen::VectorXd r = radial.realize(n, seed, 0);

  const auto risks_at = [&](const ShrinkagePlanXd& plan_t) {
    const DetEquivSolution sol = solve_alpha_gamma(sigma, plan_t, r, n);
    const double xi = solve_xi(sigma, plan_t, sigma, r, n, sol);
    const PortfolioProblem prob(v, u, sigma, plan_t);
    return std::pair<PortfolioRisks, DetEquivSolution>(portfolio_risks(prob, sol, xi), sol);
  };

  const auto [risks, sol] = risks_at(plan);
  json report;
  report["n"] = static_cast<long long>(n);
  report["p"] = static_cast<long long>(sigma.dim());
  report["k"] = static_cast<long long>(v.cols());
  report["alpha_bar"] = sol.alpha_bar;
  report["gamma_bar"] = sol.gamma_bar;
  report["w_hat_risk_naive"] = risks.w_hat_risk_naive;
  report["w_hat_risk_realized"] = risks.w_hat_risk_realized;
  report["w_opt_risk"] = risks.w_opt_risk;

  if (resolved.contains("t_grid")) {
    const Eigen::VectorXd t_grid = cfgjson::parse_vector(resolved["t_grid"], "t_grid", base);
    json rows = json::array();
    std::string csv = "t,naive,realized,optimum\n";
    for (Eigen::Index i = 0; i < t_grid.size(); ++i) {
      const PortfolioRisks rt = risks_at(plan.scaled(t_grid(i))).first;
      json row;
      row["t"] = t_grid(i);
      row["naive"] = rt.w_hat_risk_naive;
      row["realized"] = rt.w_hat_risk_realized;
      row["optimum"] = rt.w_opt_risk;
      rows.push_back(std::move(row));
      csv += fmt17(t_grid(i)) + "," + fmt17(rt.w_hat_risk_naive) + "," +
             fmt17(rt.w_hat_risk_realized) + "," + fmt17(rt.w_opt_risk) + "\n";
    }
    report["rows"] = std::move(rows);
    csvs.emplace_back("risk_rows.csv", std::move(csv));
  }
  return report;
}

json handle_ridge(json& resolved, const fs::path& base, std::uint64_t seed, CsvList&) {
  Eigen::MatrixXd x;
  if (resolved.contains("synthetic")) {
    const json& syn = resolved["synthetic"];
    const DesignDistribution dist = cfgjson::parse_design(syn.at("dist"), "synthetic.dist", base);
    const RadialLaw radial = syn.contains("radial")
                                 ? cfgjson::parse_radial(syn["radial"], "synthetic.radial", base)
                                 : RadialLaw::constant_one();
    const Eigen::Index n = syn.at("n").get<long long>();
    const DesignSample sample = sample_design(dist, radial, Eigen::VectorXd(), n, seed, 0);
    x = sample.R.asDiagonal() * sample.X;
  } else {
    x = read_matrix_csv((base / resolved.at("x_csv").get<std::string>()).string());
  }
  const SymMatrixXd gamma = cfgjson::parse_sym_matrix(resolved.at("gamma"), "gamma", base);
  if (!resolved.contains("lambda")) throw std::invalid_argument("ridge: missing field \"lambda\"");
  const double lambda = resolved["lambda"].get<double>();
  const Eigen::VectorXd beta0 = cfgjson::parse_vector(resolved.at("beta0"), "beta0", base);
  if (!resolved.contains("sigma_eps")) {
    resolved["sigma_eps"] = {{"kind", "identity"}, {"dim", static_cast<long long>(x.rows())}};
  }
  const SymMatrixXd sigma_eps =
      cfgjson::parse_sym_matrix(resolved["sigma_eps"], "sigma_eps", base);

  const RidgeProblem prob(std::move(x), gamma, lambda, beta0, sigma_eps);
  const RidgeRisk risk = ridge_risk(prob);
  json report;
  report["n"] = static_cast<long long>(prob.n());
  report["p"] = static_cast<long long>(prob.p());
  report["bias2"] = risk.bias2;
  report["variance"] = risk.variance;
  report["total"] = risk.total;
  if (risk.trace_identity) report["trace_identity"] = *risk.trace_identity;
  return report;
}

std::string replication_csv(const ExperimentReport& rep) {
  const bool paired = rep.values_y.size() > 0;
  std::string csv = paired ? "rep,value_x,value_y\n" : "rep,value_x\n";
  for (Eigen::Index i = 0; i < rep.values_x.size(); ++i) {
    csv += std::to_string(i) + "," + fmt17(rep.values_x(i));
    if (paired) csv += "," + fmt17(rep.values_y(i));
    csv += "\n";
  }
  return csv;
}

json handle_verify(json& resolved, const fs::path& base, std::uint64_t seed, int threads,
                   CsvList& csvs) {
  const std::string experiment = resolved.at("experiment").get<std::string>();
  if (experiment == "rate") {
    const RateConfig rc = cfgjson::parse_rate(resolved, base, seed, threads);
    const RateReport rep = run_rate_experiment(rc);
    std::string csv = rep.gap_means.empty() ? "n,p,mean,variance,se\n"
                                            : "n,p,mean,variance,se,gap\n";
    for (std::size_t i = 0; i < rep.n_grid.size(); ++i) {
      csv += std::to_string(rep.n_grid[i]) + "," + std::to_string(rep.p_grid[i]) + "," +
             fmt17(rep.means[i]) + "," + fmt17(rep.variances[i]) + "," + fmt17(rep.se[i]);
      if (!rep.gap_means.empty()) csv += "," + fmt17(rep.gap_means[i]);
      csv += "\n";
    }
    csvs.emplace_back("grid.csv", std::move(csv));
    return cfgjson::rate_report_json(rep);
  }

  optional_number(resolved, "allowance", 0.02);
  const ExperimentConfig cfg = cfgjson::parse_experiment(resolved, base, seed, threads);
  ExperimentReport rep;
  if (experiment == "equivalence") {
    rep = run_equivalence_experiment(cfg);
  } else if (experiment == "concentration") {
    rep = run_concentration_experiment(cfg);
  } else if (experiment == "invariance") {
    rep = run_invariance_experiment(cfg);
  } else {
    throw std::invalid_argument("verify.experiment: unknown experiment \"" + experiment +
                                "\"; expected equivalence, concentration, invariance or rate");
  }
  csvs.emplace_back("replications.csv", replication_csv(rep));
  return cfgjson::experiment_report_json(rep);
}

json handle_stieltjes(json& resolved, const fs::path& base, std::uint64_t seed, int threads,
                      CsvList& csvs) {
  const ExperimentConfig cfg = cfgjson::parse_experiment(resolved, base, seed, threads);
  const StieltjesReport rep = stieltjes_compare(cfg);
  std::string csv = "rep,re_x,im_x,re_y,im_y\n";
  for (Eigen::Index i = 0; i < rep.values.rows(); ++i) {
    csv += std::to_string(i) + "," + fmt17(rep.values(i, 0)) + "," + fmt17(rep.values(i, 1)) +
           "," + fmt17(rep.values(i, 2)) + "," + fmt17(rep.values(i, 3)) + "\n";
  }
  csvs.emplace_back("replications.csv", std::move(csv));
  return cfgjson::stieltjes_report_json(rep);
}

void write_text_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::invalid_argument("cannot open output file: " + path.string());
  out << content;
  if (!out) throw std::invalid_argument("failed writing output file: " + path.string());
}

std::string csv_banner(const std::string& hash) {
  return std::string("# shrinkeq ") + version + " config_hash=" + hash + "\n";
}

json report_envelope(Command command, const std::string& hash) {
  json envelope;
  envelope["command"] = command_name(command);
  envelope["version"] = version;
  envelope["config_hash"] = hash;
  return envelope;
}

}  // namespace

Command parse_command(const std::string& name) {
  static const std::map<std::string, Command> table = {
      {"detequiv", Command::detequiv},   {"estimate", Command::estimate},
      {"lda", Command::lda},             {"rda", Command::rda},
      {"portfolio", Command::portfolio}, {"ridge", Command::ridge},
      {"verify", Command::verify},       {"stieltjes", Command::stieltjes},
  };
  const auto it = table.find(name);
  if (it == table.end()) throw std::invalid_argument("unknown command \"" + name + "\"");
  return it->second;
}

std::string command_name(Command command) {
  switch (command) {
    case Command::detequiv: return "detequiv";
    case Command::estimate: return "estimate";
    case Command::lda: return "lda";
    case Command::rda: return "rda";
    case Command::portfolio: return "portfolio";
    case Command::ridge: return "ridge";
    case Command::verify: return "verify";
    case Command::stieltjes: return "stieltjes";
  }
  throw std::logic_error("command_name: unhandled command");
}

PlotKind parse_plot_kind(const std::string& name) {
  if (name == "variance_vs_n") return PlotKind::variance_vs_n;
  if (name == "invariance_gap") return PlotKind::invariance_gap;
  if (name == "rda_curve") return PlotKind::rda_curve;
  if (name == "risk_curve") return PlotKind::risk_curve;
  throw std::invalid_argument("unknown plot kind \"" + name +
                              "\"; expected variance_vs_n, invariance_gap, rda_curve or "
                              "risk_curve");
}

std::string plot_kind_name(PlotKind kind) {
  switch (kind) {
    case PlotKind::variance_vs_n: return "variance_vs_n";
    case PlotKind::invariance_gap: return "invariance_gap";
    case PlotKind::rda_curve: return "rda_curve";
    case PlotKind::risk_curve: return "risk_curve";
  }
  throw std::logic_error("plot_kind_name: unhandled kind");
}

void run(const RunManifest& manifest) {
  const json config = cfgjson::load_json_file(manifest.config_path);
  if (!config.is_object()) {
    throw std::invalid_argument("config root must be a JSON object");
  }
  const fs::path base_dir = fs::absolute(fs::path(manifest.config_path)).parent_path();
  const fs::path out_dir(manifest.out_dir);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) {
    throw std::invalid_argument("cannot create output directory " + out_dir.string() + ": " +
                                ec.message());
  }

  const std::uint64_t seed = resolve_seed(config, manifest.seed);
  const int threads = resolve_threads(config, manifest.threads);
  json resolved = config;
  resolved["seed"] = seed;
  resolved["threads"] = threads;

  const auto start = std::chrono::steady_clock::now();
  CsvList csvs;
  json report_body;
  switch (manifest.command) {
    case Command::detequiv: report_body = handle_detequiv(resolved, base_dir, seed, csvs); break;
    case Command::estimate: report_body = handle_estimate(resolved, base_dir, seed, csvs); break;
    case Command::lda: report_body = handle_lda(resolved, base_dir, seed, csvs); break;
    case Command::rda: report_body = handle_rda(resolved, base_dir, seed, csvs); break;
    case Command::portfolio:
      report_body = handle_portfolio(resolved, base_dir, seed, csvs);
      break;
    case Command::ridge: report_body = handle_ridge(resolved, base_dir, seed, csvs); break;
    case Command::verify:
      report_body = handle_verify(resolved, base_dir, seed, threads, csvs);
      break;
    case Command::stieltjes:
      report_body = handle_stieltjes(resolved, base_dir, seed, threads, csvs);
      break;
  }
  const double runtime =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const std::string hash = cfgjson::config_hash(resolved);

  json resolved_out = report_envelope(manifest.command, hash);
  resolved_out["config"] = resolved;
  write_text_file(out_dir / "resolved_config.json", cfgjson::canonical_dump(resolved_out) + "\n");

  json report_out = report_envelope(manifest.command, hash);
  report_out["report"] = report_body;
  write_text_file(out_dir / "report.json", cfgjson::canonical_dump(report_out) + "\n");

  for (const auto& [name, body] : csvs) {
    write_text_file(out_dir / name, csv_banner(hash) + body);
  }

  // Timing stays out of report.json so reruns are byte-identical.
  std::string log = "command=" + command_name(manifest.command) + "\n";
  log += std::string("version=") + version + "\n";
  log += "config_hash=" + hash + "\n";
  log += "seed=" + std::to_string(seed) + "\n";
  log += "threads=" + std::to_string(threads) + "\n";
  log += "runtime_seconds=" + fmt17(runtime) + "\n";
  write_text_file(out_dir / "run_log.txt", log);

  if (manifest.plot) {
    emit_plot_data((out_dir / "report.json").string(), *manifest.plot,
                   (out_dir / ("plot_" + plot_kind_name(*manifest.plot) + ".csv")).string());
  }
}

namespace {

void plot_mismatch(PlotKind kind, const std::string& why) {
  throw std::invalid_argument("emit_plot_data: report does not match plot kind " +
                              plot_kind_name(kind) + ": " + why);
}

std::string plot_row(double x, double y, double y_err, const std::string& series) {
  return fmt17(x) + "," + fmt17(y) + "," + fmt17(y_err) + "," + series + "\n";
}

}  // namespace

void emit_plot_data(const std::string& report_json_path, PlotKind kind,
                    const std::string& out_csv_path) {
  const json envelope = cfgjson::load_json_file(report_json_path);
  if (!envelope.contains("report")) {
    throw std::invalid_argument("emit_plot_data: " + report_json_path +
                                " has no \"report\" object");
  }
  const json& rep = envelope["report"];
  const std::string hash =
      envelope.contains("config_hash") ? envelope["config_hash"].get<std::string>() : "unknown";
  std::string csv = csv_banner(hash) + "x,y,y_err,series\n";

  switch (kind) {
    case PlotKind::variance_vs_n: {
      if (rep.value("experiment", "") != "rate") plot_mismatch(kind, "expected a rate report");
      const json& n_grid = rep.at("n_grid");
      const json& variances = rep.at("variances");
      const double reps = rep.value("replications", 2L);
      const double rel_se = reps > 1 ? std::sqrt(2.0 / (reps - 1)) : 0.0;
      for (std::size_t i = 0; i < n_grid.size(); ++i) {
        const double var = variances.at(i).get<double>();
        csv += plot_row(n_grid.at(i).get<double>(), var, var * rel_se, "variance");
      }
      if (rep.contains("gap_means")) {
        const json& gaps = rep["gap_means"];
        for (std::size_t i = 0; i < n_grid.size(); ++i) {
          csv += plot_row(n_grid.at(i).get<double>(), gaps.at(i).get<double>(), 0.0, "gap");
        }
      }
      break;
    }
    case PlotKind::invariance_gap: {
      if (rep.value("experiment", "") != "invariance") {
        plot_mismatch(kind, "expected an invariance report");
      }
      csv += plot_row(rep.at("n").get<double>(), rep.at("gap").get<double>(),
                      rep.at("pooled_se").get<double>(), "gap");
      break;
    }
    case PlotKind::rda_curve: {
      if (!rep.contains("rows") || !rep["rows"].is_array() ||
          (!rep["rows"].empty() && !rep["rows"].front().contains("rate_star"))) {
        plot_mismatch(kind, "expected a report with discriminant sweep rows");
      }
      for (const auto& row : rep["rows"]) {
        csv += plot_row(row.at("w").get<double>(), row.at("rate_star").get<double>(), 0.0,
                        "rate_star");
      }
      for (const auto& row : rep["rows"]) {
        csv += plot_row(row.at("w").get<double>(), row.at("rate_naive").get<double>(), 0.0,
                        "rate_naive");
      }
      break;
    }
    case PlotKind::risk_curve: {
      if (rep.contains("rows") && rep["rows"].is_array() &&
          (rep["rows"].empty() || rep["rows"].front().contains("realized"))) {
        for (const char* series : {"naive", "realized", "optimum"}) {
          for (const auto& row : rep["rows"]) {
            csv += plot_row(row.at("t").get<double>(), row.at(series).get<double>(), 0.0, series);
          }
        }
      } else if (rep.contains("w_hat_risk_realized")) {
        csv += plot_row(1.0, rep.at("w_hat_risk_naive").get<double>(), 0.0, "naive");
        csv += plot_row(1.0, rep.at("w_hat_risk_realized").get<double>(), 0.0, "realized");
        csv += plot_row(1.0, rep.at("w_opt_risk").get<double>(), 0.0, "optimum");
      } else {
        plot_mismatch(kind, "expected a portfolio report");
      }
      break;
    }
  }
  write_text_file(out_csv_path, csv);
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Deterministic equivalents and risk estimates for shrunken sample covariances"};
  app.require_subcommand(1);

  std::string config_path, out_dir, plot_name;
  std::uint64_t seed = 0;
  int threads = 0;
  std::map<const CLI::App*, Command> commands;
  static const std::pair<Command, const char*> descriptions[] = {
      {Command::detequiv, "solve the deterministic-equivalent fixed point"},
      {Command::estimate, "estimate a population quadratic form from one sample"},
      {Command::lda, "bias-corrected discriminant summary from two group CSVs"},
      {Command::rda, "regularized discriminant sweep over blend weights"},
      {Command::portfolio, "naive, realized and optimal portfolio risks"},
      {Command::ridge, "ridge regression conditional risk decomposition"},
      {Command::verify, "Monte Carlo experiment harness"},
      {Command::stieltjes, "compare Stieltjes transforms of two design families"},
  };
  for (const auto& [command, description] : descriptions) {
    CLI::App* sub = app.add_subcommand(command_name(command), description);
    sub->add_option("--config", config_path, "JSON config path")->required();
    sub->add_option("--out", out_dir, "output directory")->required();
    sub->add_option("--seed", seed, "seed override");
    sub->add_option("--threads", threads, "worker thread cap (0 = machine parallelism)");
    sub->add_option("--plot", plot_name, "also emit plot_<kind>.csv");
    commands[sub] = command;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const CLI::App* sub = app.get_subcommands().front();
    RunManifest manifest;
    manifest.command = commands.at(sub);
    manifest.config_path = config_path;
    manifest.out_dir = out_dir;
    if (sub->count("--seed") > 0) manifest.seed = seed;
    if (sub->count("--threads") > 0) manifest.threads = threads;
    if (sub->count("--plot") > 0) manifest.plot = parse_plot_kind(plot_name);
    run(manifest);
    return 0;
  } catch (const numerical_error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace shrinkeq
