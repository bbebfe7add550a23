#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace shrinkeq {

enum class Command { detequiv, estimate, lda, rda, portfolio, ridge, verify, stieltjes };

Command parse_command(const std::string& name);
std::string command_name(Command command);

enum class PlotKind { variance_vs_n, invariance_gap, rda_curve, risk_curve };

PlotKind parse_plot_kind(const std::string& name);
std::string plot_kind_name(PlotKind kind);

// One CLI invocation: a command, its JSON config, and the output directory.
// seed and threads, when set, override whatever the config carries; the
// resolved values land in resolved_config.json.
struct RunManifest {
  Command command = Command::detequiv;
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<PlotKind> plot;  // also emit plot_<kind>.csv
};

// Executes one manifest. Writes report.json, resolved_config.json and
// run_log.txt into out_dir, plus command-specific CSVs; every output embeds
// the config hash and library version. report.json carries no timing, so the
// same manifest and seed reproduce it byte for byte. Throws
// std::invalid_argument for configuration problems and numerical_error for
// numerical failures; run_cli maps those to exit codes.
void run(const RunManifest& manifest);

// Rebuilds a plot-ready CSV (columns x, y, y_err, series) from a written
// report.json. A report of the wrong shape for the kind is rejected.
void emit_plot_data(const std::string& report_json_path, PlotKind kind,
                    const std::string& out_csv_path);

// argv front end: `shrinkeq <command> --config <path> --out <dir>
// [--seed S] [--threads N] [--plot KIND]`. Exit 0 on success, 1 on
// configuration errors, 2 on numerical failures.
int run_cli(int argc, const char* const* argv);

}  // namespace shrinkeq
