#pragma once

// Configuration-driven experiment runner. A config names a waveform, a scene,
// a channel, an estimator and a metric list (optionally a network scenario);
// run_experiment executes the Monte Carlo trials and returns one row per
// (trial, metric).
//
// Seed splitting: trial t runs with seed derive_seed(masterSeed, t, "trial").
// Inside a trial every random component draws from
// derive_seed(trialSeed, 0, <component>) with components "bits", "noise",
// "measurement" and "bp", so a trial never depends on the execution order.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "isac/common.hpp"
#include "isac/estimators.hpp"
#include "isac/scene.hpp"
#include "isac/syncnet.hpp"
#include "isac/unified.hpp"
#include "isac/waveform.hpp"

namespace isac {

struct WaveformSpec {
  ModulationKind kind = ModulationKind::SingleCarrierPsk;
  double sampleRate = 1e6;
  int bitsPerSymbol = 1;
  std::size_t bits = 256;  // psk: data bits per frame
  std::size_t oversampling = 1;
  std::size_t subcarriers = 64;  // ofdm
  std::size_t symbols = 8;
  std::size_t cpLength = 16;
  std::size_t pilotSpacing = 0;
  double bandwidth = 0.0;  // chirp; 0 means the sample rate
  std::size_t samples = 64;  // chirp length
};

struct ChannelSpec {
  std::optional<double> ebOverN0Db;  // data waveforms
  std::optional<double> snrDb;       // energy over N0
  std::optional<double> maxDelay;    // s; default covers the scene and the delay grid
  double sensingVariance = 1.0;      // flat sigma_g^2 of the sensing prior
};

enum class EstimatorKind { None, MatchedFilter, Omp, Music };
std::string_view to_string(EstimatorKind kind);

struct EstimatorSpec {
  EstimatorKind kind = EstimatorKind::None;
  double thresholdDb = -13.0;
  std::size_t sparsity = 1;
  std::size_t order = 1;
  // Grids as (start, step, count); delays in samples, Doppler in Hz. An empty
  // delay grid spans 0 .. max delay in whole samples, an empty Doppler grid is {0}.
  std::vector<double> delayGrid;
  std::vector<double> dopplerGrid;
};

struct UnifiedSpec {
  double lambda = 0.5;
  RVec costWeights{1.0, 0.0, 0.0, 0.0};
  double cmax = 1e9;
  CostForm form = CostForm::FpeLike;
  std::string normalization = "max_attainable";  // or "fixed"
  double sensingReference = 1.0;                 // fixed policy only
  double commReference = 1.0;
  PhiKind phi = PhiKind::Parameters;
};

enum class SweepParameter { Lambda, EbOverN0Db, SnrDb, Cmax };
std::string_view to_string(SweepParameter p);

struct SweepSpec {
  SweepParameter parameter = SweepParameter::Lambda;
  RVec values;
};

struct ExperimentConfig {
  std::string label = "experiment";
  std::size_t trials = 1;
  std::uint64_t masterSeed = 0;
  std::size_t workers = 1;
  std::filesystem::path outputDir = ".";
  WaveformSpec waveform;
  TargetScene scene;
  std::optional<std::filesystem::path> sceneFile;
  ChannelSpec channel;
  EstimatorSpec estimator;
  std::vector<std::string> metrics;
  UnifiedSpec unified;
  std::optional<sync::NetworkScenario> sync;
  std::optional<std::filesystem::path> syncFile;
  std::optional<SweepSpec> sweep;
};

/// Metric names run_experiment understands, with their units.
struct MetricInfo {
  std::string_view name;
  std::string_view units;
};
const std::vector<MetricInfo>& known_metrics();

/// Relative file references resolve against `baseDir`. Throws ParseError or
/// ValidationError listing every problem found.
ExperimentConfig parse_config(std::string_view text, const std::string& origin = "<config>",
                              const std::filesystem::path& baseDir = ".");
ExperimentConfig load_config(const std::filesystem::path& path);
/// Config text with every default filled in.
std::string format_config(const ExperimentConfig& config);

struct ResultRow {
  std::size_t trial = 0;
  std::string scenario;
  std::string estimator;
  std::string metric;
  double value = 0.0;
  std::string units;
  std::uint64_t seed = 0;
};

/// A module error raised inside a trial, tagged with the trial index.
class TrialError : public Error {
 public:
  TrialError(std::size_t trial, const std::string& message)
      : Error("trial " + std::to_string(trial) + ": " + message), trial_(trial) {}
  std::size_t trial() const { return trial_; }

 private:
  std::size_t trial_;
};

std::uint64_t trial_seed(std::uint64_t masterSeed, std::size_t trial);

/// Transmit frame of a spec; data bits drawn from `seed`.
Waveform build_waveform(const WaveformSpec& spec, std::uint64_t seed);

/// Rows of one trial run with an explicit seed, sorted by metric.
std::vector<ResultRow> run_trial(const ExperimentConfig& config, std::size_t trial, std::uint64_t seed);

/// All trials on config.workers threads, rows sorted by (trial, metric). The
/// first failing trial aborts the run with a TrialError.
std::vector<ResultRow> run_experiment(const ExperimentConfig& config);

/// One run_experiment per sweep value; the scenario column reads
/// "<label>/<parameter>=<value>". Trial seeds are shared across sweep points.
/// Throws InvalidArgument if the config has no sweep section.
std::vector<ResultRow> run_sweep(const ExperimentConfig& config);

enum class ReportFormat { Csv, Summary };
/// Throws InvalidArgument for names other than "csv" and "summary".
ReportFormat parse_report_format(std::string_view name);

struct SummaryRow {
  std::string scenario;
  std::string estimator;
  std::string metric;
  std::string units;
  std::size_t count = 0;
  double mean = 0.0;
  double stddev = 0.0;  // population
  double min = 0.0;
  double max = 0.0;
};

/// Grouped by (scenario, estimator, metric) in sorted order.
std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows);

/// CSV: header `trial,scenario,estimator,metric,value,units,seed`, values in
/// %.17g. Summary: one line per group with count, mean, std, min, max.
/// Throws InvalidArgument on empty rows.
void emit_report(const std::vector<ResultRow>& rows, ReportFormat format, std::ostream& out);
/// Writes to a file; IoError when it cannot be written.
void emit_report(const std::vector<ResultRow>& rows, ReportFormat format, const std::filesystem::path& path);
std::string format_report(const std::vector<ResultRow>& rows, ReportFormat format);

/// Reads a CSV written by emit_report. Throws ParseError on malformed lines.
std::vector<ResultRow> parse_csv(std::string_view text, const std::string& origin = "<csv>");
std::vector<ResultRow> load_csv(const std::filesystem::path& path);

}  // namespace isac
