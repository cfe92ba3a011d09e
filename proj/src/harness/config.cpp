#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "isac/harness.hpp"
#include "isac/textdoc.hpp"

namespace isac {
namespace {

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const std::vector<std::string_view> kDataMetrics = {"ber", "ser", "bit_errors", "ber_theory"};
const std::vector<std::string_view> kSyncMetrics = {"sync_rms_position", "sync_max_position_error",
                                                   "sync_max_relative_to_error", "sync_iterations",
                                                   "sync_converged"};

bool contains(const std::vector<std::string_view>& v, std::string_view s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

// Pulls the diagnostics of a nested file into the config's list.
template <class F>
void absorb(DocReader& r, const std::string& section, const std::string& key, F&& load) {
  try {
    load();
  } catch (const DiagnosticError& e) {
    for (const auto& d : e.issues()) r.diagnostics().push_back(d);
  } catch (const Error& e) {
    r.fail(section, key, e.what());
  }
}

}  // namespace

std::string_view to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::None: return "none";
    case EstimatorKind::MatchedFilter: return "matched_filter";
    case EstimatorKind::Omp: return "omp";
    case EstimatorKind::Music: return "music";
  }
  return "?";
}

std::string_view to_string(SweepParameter p) {
  switch (p) {
    case SweepParameter::Lambda: return "lambda";
    case SweepParameter::EbOverN0Db: return "ebn0_db";
    case SweepParameter::SnrDb: return "snr_db";
    case SweepParameter::Cmax: return "cmax";
  }
  return "?";
}

const std::vector<MetricInfo>& known_metrics() {
  static const std::vector<MetricInfo> m = {
      {"papr", "ratio"},
      {"papr_db", "dB"},
      {"energy", "J"},
      {"informative", "bool"},
      {"ber", "ratio"},
      {"ser", "ratio"},
      {"bit_errors", "count"},
      {"ber_theory", "ratio"},
      {"detected", "count"},
      {"missed_targets", "count"},
      {"delay_mse", "s^2"},
      {"doppler_mse", "Hz^2"},
      {"amplitude_mse", "linear"},
      {"residual_energy", "sample_energy"},
      {"r_squared", "ratio"},
      {"fpe", "sample_energy"},
      {"flops", "count"},
      {"time_samples", "count"},
      {"spectral_bins", "count"},
      {"wcost", "ratio"},
      {"conditional_mi", "nats"},
      {"comm_mi", "nats"},
      {"capacity", "nats"},
      {"signal_metric", "score"},
      {"estimator_metric", "score"},
      {"ambiguity_peak", "J"},
      {"ambiguity_volume", "J^2"},
      {"sync_rms_position", "m"},
      {"sync_max_position_error", "m"},
      {"sync_max_relative_to_error", "s"},
      {"sync_iterations", "count"},
      {"sync_converged", "bool"},
  };
  return m;
}

ExperimentConfig parse_config(std::string_view text, const std::string& origin, const std::filesystem::path& baseDir) {
  const TextDoc doc = TextDoc::parse(text, origin);
  DocReader r(doc);
  r.declare("", {"schema_version"});
  r.declare("experiment", {"label", "trials", "master_seed", "workers", "output_dir"});
  r.declare("waveform", {"kind", "sample_rate", "bits_per_symbol", "bits", "oversampling", "subcarriers", "symbols",
                         "cp_length", "pilot_spacing", "bandwidth", "samples"});
  r.declare("scene", {"file", "label"}, {"target"});
  r.declare("channel", {"ebn0_db", "snr_db", "max_delay", "sensing_variance"});
  r.declare("estimator", {"kind", "threshold_db", "sparsity", "order", "delay_grid", "doppler_grid"});
  r.declare("metrics", {"list"});
  r.declare("unified", {"lambda", "cost_weights", "cmax", "form", "normalization", "references", "phi"});
  r.declare("sync", {"file"});
  r.declare("sweep", {"parameter", "values"});

  if (auto v = r.integer("", "schema_version", true); v && *v != 1)
    r.fail("", "schema_version", "unsupported schema version " + std::to_string(*v));

  ExperimentConfig c;
  c.label = r.text("experiment", "label").value_or(c.label);
  if (c.label.find_first_of(",\"\n") != std::string::npos) r.fail("experiment", "label", "must not contain , \" or newlines");
  if (auto v = r.unsigned_integer("experiment", "trials")) {
    if (*v < 1) r.fail("experiment", "trials", "must be >= 1");
    c.trials = *v;
  }
  if (auto v = r.unsigned_integer("experiment", "master_seed")) c.masterSeed = *v;
  if (auto v = r.unsigned_integer("experiment", "workers")) {
    if (*v < 1) r.fail("experiment", "workers", "must be >= 1");
    c.workers = *v;
  }
  if (auto v = r.text("experiment", "output_dir")) c.outputDir = (baseDir / *v).lexically_normal();

  // --- waveform
  WaveformSpec& w = c.waveform;
  if (auto k = r.text("waveform", "kind")) {
    if (*k == "psk") w.kind = ModulationKind::SingleCarrierPsk;
    else if (*k == "ofdm") w.kind = ModulationKind::Ofdm;
    else if (*k == "chirp") w.kind = ModulationKind::Chirp;
    else r.fail("waveform", "kind", "expected psk, ofdm or chirp");
  }
  if (auto v = r.number("waveform", "sample_rate")) {
    r.require_range("waveform", "sample_rate", *v, 0.0, INFINITY, false);
    w.sampleRate = *v;
  }
  if (auto v = r.integer("waveform", "bits_per_symbol")) {
    if (*v != 1 && *v != 2) r.fail("waveform", "bits_per_symbol", "must be 1 or 2");
    w.bitsPerSymbol = static_cast<int>(*v);
  }
  auto count = [&](const char* key, std::size_t& out, std::size_t min) {
    if (auto v = r.unsigned_integer("waveform", key)) {
      if (*v < min) r.fail("waveform", key, "must be >= " + std::to_string(min));
      out = *v;
    }
  };
  count("bits", w.bits, 1);
  count("oversampling", w.oversampling, 1);
  count("subcarriers", w.subcarriers, 1);
  count("symbols", w.symbols, 1);
  count("cp_length", w.cpLength, 0);
  count("pilot_spacing", w.pilotSpacing, 0);
  count("samples", w.samples, 1);
  if (auto v = r.number("waveform", "bandwidth")) {
    r.require_range("waveform", "bandwidth", *v, 0.0, w.sampleRate);
    w.bandwidth = *v;
  }
  if (w.kind == ModulationKind::SingleCarrierPsk && w.bits % static_cast<std::size_t>(w.bitsPerSymbol) != 0)
    r.fail("waveform", "bits", "must be a multiple of bits_per_symbol");
  if (w.kind == ModulationKind::Ofdm) {
    try {
      make_ofdm_layout(w.subcarriers, w.symbols, w.bitsPerSymbol, w.pilotSpacing).validate();
    } catch (const Error& e) {
      r.fail("waveform", "kind", e.what());
    }
  }
  const bool dataWaveform = w.kind != ModulationKind::Chirp;

  // --- scene
  const auto targetRows = r.rows("scene", "target");
  if (auto f = r.text("scene", "file")) {
    c.sceneFile = (baseDir / *f).lexically_normal();
    if (!targetRows.empty()) r.fail("scene", "target", "inline targets cannot be combined with scene.file");
    if (!std::filesystem::exists(*c.sceneFile)) r.fail("scene", "file", "file not found: " + c.sceneFile->string());
    else absorb(r, "scene", "file", [&] { c.scene = load_scene(*c.sceneFile); });
  } else if (!targetRows.empty()) {
    std::string inline_text = "schema_version = 1\n[scene]\n";
    if (auto l = r.text("scene", "label")) inline_text += "label = " + *l + "\n";
    for (const Entry* e : targetRows) inline_text += "target = " + e->value + "\n";
    absorb(r, "scene", "target", [&] { c.scene = parse_scene(inline_text, origin + " [scene]"); });
  } else {
    c.scene = TargetScene({Target{}}, {}, "identity");
  }

  // --- channel
  if (auto v = r.number("channel", "ebn0_db")) {
    c.channel.ebOverN0Db = *v;
    if (!dataWaveform) r.fail("channel", "ebn0_db", "requires a data waveform (psk or ofdm); use snr_db");
  }
  if (auto v = r.number("channel", "snr_db")) {
    c.channel.snrDb = *v;
    if (c.channel.ebOverN0Db) r.fail("channel", "snr_db", "ebn0_db and snr_db are mutually exclusive");
  }
  if (auto v = r.number("channel", "max_delay")) {
    r.require_range("channel", "max_delay", *v, 0.0, INFINITY);
    c.channel.maxDelay = *v;
    for (const auto& t : c.scene.targets())
      if (t.delay > *v) r.fail("channel", "max_delay", "scene target delay " + g17(t.delay) + " s exceeds the window");
  }
  if (auto v = r.number("channel", "sensing_variance")) {
    r.require_range("channel", "sensing_variance", *v, 0.0, INFINITY);
    c.channel.sensingVariance = *v;
  }
  for (const auto& t : c.scene.targets())
    if (std::abs(t.doppler) > w.sampleRate / 2.0)
      r.fail("scene", "target", "Doppler " + g17(t.doppler) + " Hz exceeds fs/2");

  // --- estimator
  EstimatorSpec& e = c.estimator;
  if (auto k = r.text("estimator", "kind")) {
    if (*k == "none") e.kind = EstimatorKind::None;
    else if (*k == "matched_filter") e.kind = EstimatorKind::MatchedFilter;
    else if (*k == "omp") e.kind = EstimatorKind::Omp;
    else if (*k == "music") e.kind = EstimatorKind::Music;
    else r.fail("estimator", "kind", "expected none, matched_filter, omp or music");
  }
  if (auto v = r.number("estimator", "threshold_db")) {
    r.require_range("estimator", "threshold_db", *v, -INFINITY, 0.0);
    e.thresholdDb = *v;
  }
  if (auto v = r.unsigned_integer("estimator", "sparsity")) {
    if (*v < 1) r.fail("estimator", "sparsity", "must be >= 1");
    e.sparsity = *v;
  }
  if (auto v = r.unsigned_integer("estimator", "order")) {
    if (*v < 1) r.fail("estimator", "order", "must be >= 1");
    e.order = *v;
  }
  auto grid = [&](const char* key, std::vector<double>& out) {
    if (auto v = r.numbers("estimator", key)) {
      if (v->size() != 3 || !((*v)[1] > 0.0) || (*v)[2] < 1.0 || (*v)[2] != std::floor((*v)[2]))
        r.fail("estimator", key, "expected '<start> <step > 0> <count >= 1>'");
      else out = *v;
    }
  };
  grid("delay_grid", e.delayGrid);
  grid("doppler_grid", e.dopplerGrid);
  if (!e.delayGrid.empty() && e.delayGrid[0] < 0.0) r.fail("estimator", "delay_grid", "delays must be >= 0");
  if (!e.dopplerGrid.empty()) {
    const double hi = e.dopplerGrid[0] + e.dopplerGrid[1] * (e.dopplerGrid[2] - 1.0);
    if (std::abs(e.dopplerGrid[0]) > w.sampleRate / 2.0 || std::abs(hi) > w.sampleRate / 2.0)
      r.fail("estimator", "doppler_grid", "grid leaves [-fs/2, fs/2]");
  }
  if (c.channel.maxDelay && !e.delayGrid.empty()) {
    const double hi = (e.delayGrid[0] + e.delayGrid[1] * (e.delayGrid[2] - 1.0)) / w.sampleRate;
    if (hi > *c.channel.maxDelay * (1.0 + 1e-12))
      r.fail("estimator", "delay_grid", "grid extends beyond channel.max_delay");
  }
  if (e.kind == EstimatorKind::Music && w.kind != ModulationKind::Ofdm)
    r.fail("estimator", "kind", "music requires an ofdm waveform");

  // --- metrics
  if (auto v = r.words("metrics", "list", true)) {
    for (const auto& m : *v) {
      const auto& km = known_metrics();
      if (std::none_of(km.begin(), km.end(), [&](const MetricInfo& i) { return i.name == m; })) {
        r.fail("metrics", "list", "unknown metric '" + m + "'");
        continue;
      }
      if (std::find(c.metrics.begin(), c.metrics.end(), m) != c.metrics.end()) {
        r.fail("metrics", "list", "duplicate metric '" + m + "'");
        continue;
      }
      if (contains(kDataMetrics, m) && !dataWaveform) r.fail("metrics", "list", m + " requires a data waveform");
      c.metrics.push_back(m);
    }
    if (v->empty()) r.fail("metrics", "list", "at least one metric is required");
  }
  const bool wantsSignalMetric = std::find(c.metrics.begin(), c.metrics.end(), "signal_metric") != c.metrics.end();

  // --- unified
  UnifiedSpec& u = c.unified;
  if (auto v = r.number("unified", "lambda")) {
    if (wantsSignalMetric) r.require_range("unified", "lambda", *v, 0.0, 1.0, false, false);
    else r.require_range("unified", "lambda", *v, 0.0, 1.0);
    u.lambda = *v;
  }
  if (auto v = r.numbers("unified", "cost_weights")) {
    const double sum = std::accumulate(v->begin(), v->end(), 0.0);
    if (v->size() != 4) r.fail("unified", "cost_weights", "expected 4 weights (flops time_samples spectral_bins apriori_inputs)");
    else if (std::any_of(v->begin(), v->end(), [](double x) { return x < 0.0; }) || std::abs(sum - 1.0) > 1e-9)
      r.fail("unified", "cost_weights", "weights must be >= 0 and sum to 1");
    else u.costWeights = *v;
  }
  if (auto v = r.number("unified", "cmax")) {
    r.require_range("unified", "cmax", *v, 0.0, INFINITY, false);
    u.cmax = *v;
  }
  if (auto v = r.text("unified", "form")) {
    if (*v == "fpe") u.form = CostForm::FpeLike;
    else if (*v == "additive") u.form = CostForm::Additive;
    else r.fail("unified", "form", "expected fpe or additive");
  }
  if (auto v = r.text("unified", "normalization")) {
    if (*v != "max_attainable" && *v != "fixed") r.fail("unified", "normalization", "expected max_attainable or fixed");
    u.normalization = *v;
  }
  if (auto v = r.numbers("unified", "references")) {
    if (v->size() != 2 || (*v)[0] == 0.0 || (*v)[1] == 0.0)
      r.fail("unified", "references", "expected two nonzero numbers '<sensing> <comm>'");
    else u.sensingReference = (*v)[0], u.commReference = (*v)[1];
    if (u.normalization != "fixed") r.fail("unified", "references", "only used with normalization = fixed");
  }
  if (auto v = r.text("unified", "phi")) {
    if (*v == "parameters") u.phi = PhiKind::Parameters;
    else if (*v == "data") u.phi = PhiKind::Data;
    else r.fail("unified", "phi", "expected parameters or data");
  }

  // --- sync
  if (auto f = r.text("sync", "file")) {
    c.syncFile = (baseDir / *f).lexically_normal();
    if (!std::filesystem::exists(*c.syncFile)) r.fail("sync", "file", "file not found: " + c.syncFile->string());
    else absorb(r, "sync", "file", [&] { c.sync = sync::load_network(*c.syncFile); });
  }
  for (const auto& m : c.metrics)
    if (contains(kSyncMetrics, m) && !doc.has_section("sync")) r.fail("metrics", "list", m + " requires a [sync] section");

  // --- sweep
  if (doc.has_section("sweep")) {
    SweepSpec s;
    if (auto p = r.text("sweep", "parameter", true)) {
      if (*p == "lambda") s.parameter = SweepParameter::Lambda;
      else if (*p == "ebn0_db") s.parameter = SweepParameter::EbOverN0Db;
      else if (*p == "snr_db") s.parameter = SweepParameter::SnrDb;
      else if (*p == "cmax") s.parameter = SweepParameter::Cmax;
      else r.fail("sweep", "parameter", "expected lambda, ebn0_db, snr_db or cmax");
    }
    if (auto v = r.numbers("sweep", "values", true)) {
      s.values = *v;
      if (v->empty()) r.fail("sweep", "values", "at least one value is required");
      for (double x : *v) {
        if (s.parameter == SweepParameter::Lambda) {
          if (wantsSignalMetric) r.require_range("sweep", "values", x, 0.0, 1.0, false, false);
          else r.require_range("sweep", "values", x, 0.0, 1.0);
        }
        if (s.parameter == SweepParameter::Cmax) r.require_range("sweep", "values", x, 0.0, INFINITY, false);
      }
      if (s.parameter == SweepParameter::EbOverN0Db && !dataWaveform)
        r.fail("sweep", "parameter", "ebn0_db requires a data waveform");
    }
    c.sweep = s;
  }

  r.finish();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string(), path.parent_path());
}

std::string format_config(const ExperimentConfig& c) {
  std::ostringstream os;
  os << "schema_version = 1\n\n[experiment]\n"
     << "label = " << c.label << "\ntrials = " << c.trials << "\nmaster_seed = " << c.masterSeed
     << "\nworkers = " << c.workers << "\noutput_dir = " << c.outputDir.string() << "\n";
  const auto& w = c.waveform;
  os << "\n[waveform]\nkind = " << to_string(w.kind) << "\nsample_rate = " << g17(w.sampleRate);
  switch (w.kind) {
    case ModulationKind::SingleCarrierPsk:
      os << "\nbits_per_symbol = " << w.bitsPerSymbol << "\nbits = " << w.bits << "\noversampling = " << w.oversampling;
      break;
    case ModulationKind::Ofdm:
      os << "\nbits_per_symbol = " << w.bitsPerSymbol << "\nsubcarriers = " << w.subcarriers
         << "\nsymbols = " << w.symbols << "\ncp_length = " << w.cpLength << "\npilot_spacing = " << w.pilotSpacing;
      break;
    case ModulationKind::Chirp:
      os << "\nbandwidth = " << g17(w.bandwidth > 0.0 ? w.bandwidth : w.sampleRate) << "\nsamples = " << w.samples;
      break;
  }
  os << "\n\n[scene]\n";
  if (c.sceneFile) {
    os << "file = " << c.sceneFile->string() << "\n";
  } else {
    if (!c.scene.label().empty()) os << "label = " << c.scene.label() << "\n";
    for (const auto& t : c.scene.targets())
      os << "target = " << g17(t.amplitude.real()) << " " << g17(t.amplitude.imag()) << " " << g17(t.delay) << " "
         << g17(t.doppler) << "\n";
  }
  os << "\n[channel]\n";
  if (c.channel.ebOverN0Db) os << "ebn0_db = " << g17(*c.channel.ebOverN0Db) << "\n";
  if (c.channel.snrDb) os << "snr_db = " << g17(*c.channel.snrDb) << "\n";
  if (c.channel.maxDelay) os << "max_delay = " << g17(*c.channel.maxDelay) << "\n";
  os << "sensing_variance = " << g17(c.channel.sensingVariance) << "\n";
  const auto& e = c.estimator;
  os << "\n[estimator]\nkind = " << to_string(e.kind) << "\nthreshold_db = " << g17(e.thresholdDb)
     << "\nsparsity = " << e.sparsity << "\norder = " << e.order << "\n";
  auto grid = [&](const char* key, const std::vector<double>& g) {
    if (g.empty()) return;
    os << key << " = " << g17(g[0]) << " " << g17(g[1]) << " " << g17(g[2]) << "\n";
  };
  grid("delay_grid", e.delayGrid);
  grid("doppler_grid", e.dopplerGrid);
  os << "\n[metrics]\nlist =";
  for (const auto& m : c.metrics) os << " " << m;
  const auto& u = c.unified;
  os << "\n\n[unified]\nlambda = " << g17(u.lambda) << "\ncost_weights =";
  for (double x : u.costWeights) os << " " << g17(x);
  os << "\ncmax = " << g17(u.cmax) << "\nform = " << (u.form == CostForm::FpeLike ? "fpe" : "additive")
     << "\nnormalization = " << u.normalization << "\n";
  if (u.normalization == "fixed") os << "references = " << g17(u.sensingReference) << " " << g17(u.commReference) << "\n";
  os << "phi = " << (u.phi == PhiKind::Parameters ? "parameters" : "data") << "\n";
  if (c.syncFile) os << "\n[sync]\nfile = " << c.syncFile->string() << "\n";
  if (c.sweep) {
    os << "\n[sweep]\nparameter = " << to_string(c.sweep->parameter) << "\nvalues =";
    for (double x : c.sweep->values) os << " " << g17(x);
    os << "\n";
  }
  return os.str();
}

}  // namespace isac
