// Command-line front end of the experiment harness.
//
//   isac simulate  --config exp.cfg [--seed N] [--workers N] [--out DIR] [--format csv|summary]
//   isac sweep     --config exp.cfg ...           (config needs a [sweep] section)
//   isac ambiguity --config exp.cfg [--lags N] [--out DIR]
//   isac metrics   --input results.csv [--format csv|summary] [--out DIR]
//   isac sync      --config network.net [--trials N] [--seed N] ...
//
// Exit codes: 0 success, 2 validation error, 3 runtime error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "isac/harness.hpp"
#include "isac/metrics.hpp"
#include "isac/textdoc.hpp"

namespace {

using namespace isac;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::string out;
  std::string format = "csv";
  std::string input;
  std::size_t trials = 1;
  std::optional<std::size_t> lags;
};

void write_rows(const std::vector<ResultRow>& rows, const Options& o, const std::string& stem) {
  const ReportFormat f = parse_report_format(o.format);
  if (o.out.empty()) {
    emit_report(rows, f, std::cout);
    return;
  }
  const auto path = std::filesystem::path(o.out) / (stem + (f == ReportFormat::Csv ? ".csv" : "_summary.csv"));
  emit_report(rows, f, path);
  std::fprintf(stderr, "wrote %zu rows to %s\n", rows.size(), path.string().c_str());
}

ExperimentConfig load_with_overrides(const Options& o) {
  ExperimentConfig c = load_config(o.config);
  if (o.seed) c.masterSeed = *o.seed;
  if (o.workers) c.workers = *o.workers;
  return c;
}

int cmd_simulate(const Options& o) {
  write_rows(run_experiment(load_with_overrides(o)), o, "results");
  return 0;
}

int cmd_sweep(const Options& o) {
  write_rows(run_sweep(load_with_overrides(o)), o, "sweep");
  return 0;
}

int cmd_metrics(const Options& o) {
  write_rows(load_csv(o.input), o, "metrics");
  return 0;
}

int cmd_sync(const Options& o) {
  ExperimentConfig c;
  c.sync = sync::load_network(o.config);
  c.label = c.sync->label.empty() ? "sync" : c.sync->label;
  c.trials = o.trials;
  c.masterSeed = o.seed.value_or(c.sync->bp.seed);
  c.workers = o.workers.value_or(1);
  c.metrics = {"sync_rms_position", "sync_max_position_error", "sync_max_relative_to_error", "sync_iterations",
               "sync_converged"};
  write_rows(run_experiment(c), o, "sync");
  return 0;
}

int cmd_ambiguity(const Options& o) {
  const ExperimentConfig c = load_with_overrides(o);
  const Waveform u = build_waveform(c.waveform, derive_seed(trial_seed(c.masterSeed, 0), 0, "bits"));
  auto [delays, dopplers] = full_ambiguity_grids(u);
  if (o.lags) {
    const double lim = static_cast<double>(*o.lags) / u.sampleRate * (1.0 + 1e-12);
    RVec kept;
    for (double d : delays)
      if (std::abs(d) <= lim) kept.push_back(d);
    delays = kept;
  }
  const AmbiguityMap a = ambiguity(u, delays, dopplers);
  std::ofstream file;
  std::ostream* os = &std::cout;
  if (!o.out.empty()) {
    std::filesystem::create_directories(o.out);
    const auto path = std::filesystem::path(o.out) / "ambiguity.csv";
    file.open(path);
    if (!file) throw IoError("cannot write " + path.string());
    os = &file;
  }
  *os << "delay_s,doppler_hz,value\n";
  char buf[96];
  for (std::size_t i = 0; i < dopplers.size(); ++i)
    for (std::size_t j = 0; j < delays.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", delays[j], dopplers[i],
                    a.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
      *os << buf;
    }
  if (!*os) throw IoError("write failed");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"delay-Doppler sensing and communication metrics harness"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub, bool needsConfig) {
    auto* opt = sub->add_option("--config", o.config, "experiment config (network file for sync)")->check(CLI::ExistingFile);
    if (needsConfig) opt->required();
    sub->add_option("--seed", o.seed, "master seed override");
    sub->add_option("--workers", o.workers, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--out", o.out, "output directory (default: stdout)");
    sub->add_option("--format", o.format, "csv or summary")->check(CLI::IsMember({"csv", "summary"}));
  };
  auto* simulate = app.add_subcommand("simulate", "scene -> rx -> estimate -> metrics");
  common(simulate, true);
  auto* sweep = app.add_subcommand("sweep", "run the config's [sweep] grid");
  common(sweep, true);
  auto* amb = app.add_subcommand("ambiguity", "ambiguity map of the config's waveform as a CSV grid");
  common(amb, true);
  amb->add_option("--lags", o.lags, "keep delays within +-N samples");
  auto* metrics = app.add_subcommand("metrics", "re-emit or summarize a stored results CSV");
  common(metrics, false);
  metrics->add_option("--input", o.input, "results CSV")->required()->check(CLI::ExistingFile);
  auto* syncCmd = app.add_subcommand("sync", "network synchronization scenario");
  common(syncCmd, true);
  syncCmd->add_option("--trials", o.trials, "Monte Carlo trials")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*simulate) return cmd_simulate(o);
    if (*sweep) return cmd_sweep(o);
    if (*amb) return cmd_ambiguity(o);
    if (*metrics) return cmd_metrics(o);
    if (*syncCmd) return cmd_sync(o);
  } catch (const DiagnosticError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 3;
}
