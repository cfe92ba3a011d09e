#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <optional>
#include <thread>

#include "isac/dictionary.hpp"
#include "isac/harness.hpp"
#include "isac/metrics.hpp"
#include "isac/textdoc.hpp"

namespace isac {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool wants(const ExperimentConfig& c, std::string_view m) {
  return std::find(c.metrics.begin(), c.metrics.end(), m) != c.metrics.end();
}

bool wants_any(const ExperimentConfig& c, std::initializer_list<std::string_view> ms) {
  return std::any_of(ms.begin(), ms.end(), [&](std::string_view m) { return wants(c, m); });
}

std::string_view units_of(std::string_view metric) {
  for (const auto& m : known_metrics())
    if (m.name == metric) return m.units;
  return "";
}

Bits random_bits(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Bits b(n);
  for (auto& x : b) x = static_cast<std::uint8_t>(rng() >> 63);
  return b;
}

}  // namespace

Waveform build_waveform(const WaveformSpec& w, std::uint64_t seed) {
  switch (w.kind) {
    case ModulationKind::SingleCarrierPsk:
      return generate_psk_frame(random_bits(w.bits, seed), w.bitsPerSymbol, w.sampleRate, w.oversampling);
    case ModulationKind::Ofdm: {
      ModulationLayout layout = make_ofdm_layout(w.subcarriers, w.symbols, w.bitsPerSymbol, w.pilotSpacing);
      layout.dataBits = random_bits(layout.data_cells() * static_cast<std::size_t>(w.bitsPerSymbol), seed);
      return generate_ofdm(std::move(layout), w.sampleRate, w.cpLength);
    }
    case ModulationKind::Chirp:
      return generate_chirp(w.bandwidth > 0.0 ? w.bandwidth : w.sampleRate,
                            static_cast<double>(w.samples) / w.sampleRate, w.sampleRate);
  }
  throw InvalidArgument("unknown waveform kind");
}

namespace {

RVec expand_grid(const std::vector<double>& g, double scale) {
  RVec out(static_cast<std::size_t>(g[2]));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (g[0] + g[1] * static_cast<double>(i)) * scale;
  return out;
}

// Noise PSD N0 implied by the channel spec; 0 means noiseless.
double noise_psd(const ChannelSpec& ch, const Waveform& u) {
  if (ch.ebOverN0Db) {
    const double eb = u.energy() / static_cast<double>(u.layout.dataBits.size());
    return eb / db_to_linear(*ch.ebOverN0Db);
  }
  if (ch.snrDb) return u.energy() / db_to_linear(*ch.snrDb);
  return 0.0;
}

struct Match {
  const Target* truth;
  const EstimatedTarget* estimate;  // null when missed
};

// Greedy nearest-estimate assignment in resolution cells, truth in scene order.
std::vector<Match> match_targets(const TargetScene& scene, const EstimateReport& rep, double fs, double T) {
  std::vector<bool> used(rep.targets.size(), false);
  std::vector<Match> out;
  for (const auto& t : scene.targets()) {
    std::size_t best = rep.targets.size();
    double bestD = INFINITY;
    for (std::size_t k = 0; k < rep.targets.size(); ++k) {
      if (used[k]) continue;
      const double dt = (rep.targets[k].delay - t.delay) * fs;
      const double dn = (rep.targets[k].doppler - t.doppler) * T;
      const double d = dt * dt + dn * dn;
      if (d < bestD) bestD = d, best = k;
    }
    if (best < rep.targets.size()) used[best] = true;
    out.push_back({&t, best < rep.targets.size() ? &rep.targets[best] : nullptr});
  }
  return out;
}

RVec stack(std::span<const cplx> x) {
  RVec out;
  out.reserve(2 * x.size());
  for (const auto& v : x) out.push_back(v.real());
  for (const auto& v : x) out.push_back(v.imag());
  return out;
}

class TrialRunner {
 public:
  TrialRunner(const ExperimentConfig& c, std::size_t trial, std::uint64_t seed)
      : c_(c), trial_(trial), seed_(seed) {}

  std::vector<ResultRow> run() {
    if (std::any_of(c_.metrics.begin(), c_.metrics.end(), [](const std::string& m) { return m.rfind("sync_", 0) != 0; }))
      run_signal_chain();
    if (c_.sync && wants_any(c_, {"sync_rms_position", "sync_max_position_error", "sync_max_relative_to_error",
                                  "sync_iterations", "sync_converged"}))
      run_sync();
    std::sort(rows_.begin(), rows_.end(), [](const ResultRow& a, const ResultRow& b) { return a.metric < b.metric; });
    return std::move(rows_);
  }

 private:
  void emit(std::string metric, double value, std::string_view units, std::string_view estimator) {
    rows_.push_back({trial_, c_.label, std::string(estimator), std::move(metric), value, std::string(units), seed_});
  }
  void emit(std::string_view metric, double value) {
    emit(std::string(metric), value, units_of(metric), to_string(c_.estimator.kind));
  }

  void run_signal_chain() {
    const WaveformSpec& ws = c_.waveform;
    const double fs = ws.sampleRate;
    const Waveform u = build_waveform(ws, derive_seed(seed_, 0, "bits"));
    const double T = u.duration();
    const bool data = u.layout.kind != ModulationKind::Chirp;
    const double n0 = noise_psd(c_.channel, u);
    const NoiseModel noise = n0 > 0.0 ? NoiseModel::white(n0, derive_seed(seed_, 0, "noise")) : NoiseModel::none();

    if (wants(c_, "papr")) emit("papr", papr(u).ratio);
    if (wants(c_, "papr_db")) emit("papr_db", papr(u).db);
    if (wants(c_, "energy")) emit("energy", u.energy());
    if (wants(c_, "ber_theory")) emit("ber_theory", n0 > 0.0 ? ber_theoretical_bpsk(u.energy() / static_cast<double>(u.layout.dataBits.size()) / n0) : 0.0);
    if (wants_any(c_, {"ambiguity_peak", "ambiguity_volume"})) {
      const auto [dg, ng] = full_ambiguity_grids(u);
      const AmbiguityMap a = ambiguity(u, dg, ng);
      if (wants(c_, "ambiguity_peak")) emit("ambiguity_peak", a.at(0.0, 0.0));
      if (wants(c_, "ambiguity_volume")) emit("ambiguity_volume", a.volume());
    }

    const SensingPrior prior{{c_.channel.sensingVariance}};
    const CommScenario comm = CommScenario::hard_decision(u, noise);
    if (wants(c_, "conditional_mi")) emit("conditional_mi", conditional_mi(u, prior, noise, T));
    if (wants(c_, "comm_mi")) emit("comm_mi", mutual_information(comm.joint()));
    if (wants(c_, "capacity")) emit("capacity", channel_capacity(comm.channel).capacity);
    if (wants(c_, "signal_metric")) {
      const UnifiedSpec& us = c_.unified;
      std::unique_ptr<NormalizationPolicy> policy;
      if (us.normalization == "fixed") policy = std::make_unique<FixedReferencePolicy>(us.sensingReference, us.commReference);
      else policy = std::make_unique<MaxAttainablePolicy>();
      const SignalScore s = signal_metric(u, prior, noise, comm, us.lambda, *policy, T);
      emit("signal_metric", s.value);
      emit("signal_metric.lambda", s.lambda, "weight", to_string(c_.estimator.kind));
      emit("signal_metric.sensing_raw", s.sensingRaw, "nats", to_string(c_.estimator.kind));
      emit("signal_metric.comm_raw", s.commRaw, "nats", to_string(c_.estimator.kind));
      emit("signal_metric.sensing_reference", s.normalization.sensingReference, "nats", to_string(c_.estimator.kind));
      emit("signal_metric.comm_reference", s.normalization.commReference, "nats", to_string(c_.estimator.kind));
    }

    // Delay window and estimator grids.
    double maxDelay = 0.0;
    for (const auto& t : c_.scene.targets()) maxDelay = std::max(maxDelay, t.delay);
    const EstimatorSpec& es = c_.estimator;
    if (!es.delayGrid.empty()) maxDelay = std::max(maxDelay, expand_grid(es.delayGrid, 1.0 / fs).back());
    if (c_.channel.maxDelay) maxDelay = *c_.channel.maxDelay;
    const ChannelWindow window{std::ceil(maxDelay * fs - 1e-9) / fs, fs / 2.0};

    const bool needDict = es.kind != EstimatorKind::None || wants(c_, "informative");
    std::optional<Dictionary> dict;
    if (needDict) {
      RVec delays = es.delayGrid.empty() ? expand_grid({0.0, 1.0, static_cast<double>(window.max_delay_samples(fs) + 1)}, 1.0 / fs)
                                         : expand_grid(es.delayGrid, 1.0 / fs);
      RVec dopplers = es.dopplerGrid.empty() ? RVec{0.0} : expand_grid(es.dopplerGrid, 1.0);
      dict.emplace(u, std::move(delays), std::move(dopplers), u.size() + window.max_delay_samples(fs));
    }
    if (wants(c_, "informative")) emit("informative", informativeness_check(u, *dict).isInformative ? 1.0 : 0.0);

    if (!wants_any(c_, {"ber", "ser", "bit_errors", "detected", "missed_targets", "delay_mse", "doppler_mse",
                        "amplitude_mse", "residual_energy", "r_squared", "fpe", "flops", "time_samples",
                        "spectral_bins", "wcost", "estimator_metric"}))
      return;

    const ReceivedSignal rx = apply_channel(u, c_.scene, noise, window);
    EstimateReport rep;
    rep.estimator = "none";
    rep.predictedSignal.assign(rx.samples.size(), cplx{});
    rep.residualEnergy = residual_energy(rx.samples, rep.predictedSignal);
    switch (es.kind) {
      case EstimatorKind::None: break;
      case EstimatorKind::MatchedFilter: rep = matched_filter_estimate(rx, u, *dict, es.thresholdDb); break;
      case EstimatorKind::Omp: rep = omp_estimate(rx, *dict, es.sparsity); break;
      case EstimatorKind::Music: rep = music_estimate(rx, es.order, *dict); break;
    }

    CommReport cr;
    if (data && wants_any(c_, {"ber", "ser", "bit_errors", "estimator_metric"})) {
      EstimateReport channel = rep;
      if (es.kind == EstimatorKind::None) channel.targets.clear();
      const Bits decoded = demodulate(rx, u, channel);
      cr = CommReport::from_bits(u.layout.dataBits, decoded, u.layout.bitsPerSymbol,
                                 c_.channel.ebOverN0Db.value_or(0.0));
    }
    if (wants(c_, "ber")) emit("ber", cr.ber);
    if (wants(c_, "ser")) emit("ser", cr.ser);
    if (wants(c_, "bit_errors")) emit("bit_errors", static_cast<double>(cr.bitErrors));

    const auto matches = match_targets(c_.scene, rep, fs, T);
    std::size_t matched = 0;
    double sd = 0.0, sn = 0.0, sa = 0.0;
    for (const auto& m : matches) {
      if (!m.estimate) continue;
      ++matched;
      sd += (m.estimate->delay - m.truth->delay) * (m.estimate->delay - m.truth->delay);
      sn += (m.estimate->doppler - m.truth->doppler) * (m.estimate->doppler - m.truth->doppler);
      sa += std::norm(m.estimate->amplitude - m.truth->amplitude);
    }
    const double k = static_cast<double>(matched);
    if (wants(c_, "detected")) emit("detected", static_cast<double>(rep.targets.size()));
    if (wants(c_, "missed_targets")) emit("missed_targets", static_cast<double>(matches.size() - matched));
    if (wants(c_, "delay_mse")) emit("delay_mse", matched ? sd / k : kNaN);
    if (wants(c_, "doppler_mse")) emit("doppler_mse", matched ? sn / k : kNaN);
    if (wants(c_, "amplitude_mse")) emit("amplitude_mse", matched ? sa / k : kNaN);
    if (wants(c_, "residual_energy")) emit("residual_energy", rep.residualEnergy);
    if (wants_any(c_, {"r_squared", "fpe"})) {
      const RVec y = stack(rx.samples);
      const RVec yhat = stack(rep.predictedSignal);
      if (wants(c_, "r_squared")) emit("r_squared", r_squared(y, yhat));
      if (wants(c_, "fpe")) emit("fpe", fpe(y, yhat, 4 * rep.targets.size()));
    }
    const auto costs = rep.cost.cost_vector();
    if (wants(c_, "flops")) emit("flops", costs[0]);
    if (wants(c_, "time_samples")) emit("time_samples", costs[1]);
    if (wants(c_, "spectral_bins")) emit("spectral_bins", costs[2]);
    const UnifiedSpec& us = c_.unified;
    if (wants(c_, "wcost")) emit("wcost", tally_cost(rep, us.costWeights, us.cmax, us.form));
    if (wants(c_, "estimator_metric")) {
      const CostSpec spec{us.costWeights, us.cmax, us.form};
      EstimatorScore s;
      if (us.phi == PhiKind::Parameters) {
        // Delays in samples and Doppler in bins of 1/T; a missed target is
        // scored against the origin of the grid.
        RVec phi, phiHat;
        for (const auto& m : matches) {
          phi.push_back(m.truth->delay * fs);
          phi.push_back(m.truth->doppler * T);
          phiHat.push_back(m.estimate ? m.estimate->delay * fs : 0.0);
          phiHat.push_back(m.estimate ? m.estimate->doppler * T : 0.0);
        }
        s = estimator_metric(std::span<const double>(phi), std::span<const double>(phiHat), cr, us.lambda, rep.cost,
                             spec, PhiKind::Parameters);
      } else {
        s = estimator_metric(std::span<const cplx>(rx.samples), std::span<const cplx>(rep.predictedSignal), cr,
                             us.lambda, rep.cost, spec, PhiKind::Data);
      }
      const auto est = to_string(es.kind);
      emit("estimator_metric", s.value);
      emit("estimator_metric.lambda", s.lambda, "weight", est);
      emit("estimator_metric.wcost", s.wcost, "ratio", est);
      emit("estimator_metric.sensing_error", s.sensingError, us.phi == PhiKind::Parameters ? "cells^2" : "sample_energy", est);
      emit("estimator_metric.comm_error", s.commError, "ratio", est);
      emit("estimator_metric.cmax", us.cmax, "cost", est);
      for (std::size_t i = 0; i < 4; ++i)
        emit("estimator_metric.weight_" + std::string(CostLedger::kLabels[i]), us.costWeights[i], "weight", est);
    }
  }

  void run_sync() {
    const sync::NetworkScenario& ns = *c_.sync;
    const auto meas = sync::simulate_measurements(ns.topology, ns.truth, ns.model, derive_seed(seed_, 0, "measurement"),
                                                  ns.noiseScale);
    const sync::FactorGraph g = sync::build_factor_graph(ns.topology, ns.priors, meas, ns.model, ns.mask);
    sync::BPConfig bp = ns.bp;
    bp.seed = derive_seed(seed_, 0, "bp");
    bp.workers = 1;
    const sync::BPResult res = sync::run_loopy_bp(g, bp);
    std::map<int, sync::ApertureState> est, truth;
    for (const auto& t : ns.truth) {
      if (ns.topology.is_anchor(t.id)) continue;
      truth[t.id] = t;
      est[t.id] = sync::estimate_mmse(res.beliefs.at(t.id));
    }
    const sync::SyncReport rep = sync::sync_error_report(est, truth);
    double worst = 0.0;
    for (const auto& a : rep.agents) worst = std::max(worst, a.position);
    auto out = [&](std::string_view m, double v) { emit(std::string(m), v, units_of(m), "loopy_bp"); };
    if (wants(c_, "sync_rms_position")) out("sync_rms_position", rep.rmsPosition);
    if (wants(c_, "sync_max_position_error")) out("sync_max_position_error", worst);
    if (wants(c_, "sync_max_relative_to_error")) out("sync_max_relative_to_error", rep.maxRelativeTimeOffsetError);
    if (wants(c_, "sync_iterations")) out("sync_iterations", static_cast<double>(res.iterations));
    if (wants(c_, "sync_converged")) out("sync_converged", res.converged ? 1.0 : 0.0);
  }

  const ExperimentConfig& c_;
  std::size_t trial_;
  std::uint64_t seed_;
  std::vector<ResultRow> rows_;
};

}  // namespace

std::uint64_t trial_seed(std::uint64_t masterSeed, std::size_t trial) { return derive_seed(masterSeed, trial, "trial"); }

std::vector<ResultRow> run_trial(const ExperimentConfig& config, std::size_t trial, std::uint64_t seed) {
  try {
    return TrialRunner(config, trial, seed).run();
  } catch (const TrialError&) {
    throw;
  } catch (const std::exception& e) {
    throw TrialError(trial, e.what());
  }
}

std::vector<ResultRow> run_experiment(const ExperimentConfig& config) {
  if (config.trials < 1) throw InvalidArgument("trials must be >= 1");
  std::vector<std::vector<ResultRow>> perTrial(config.trials);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex mu;
  std::optional<TrialError> firstError;

  auto worker = [&] {
    while (!failed.load()) {
      const std::size_t t = next.fetch_add(1);
      if (t >= config.trials) return;
      try {
        perTrial[t] = run_trial(config, t, trial_seed(config.masterSeed, t));
      } catch (const TrialError& e) {
        std::lock_guard lock(mu);
        if (!firstError || e.trial() < firstError->trial()) firstError.emplace(e);
        failed = true;
      }
    }
  };
  const std::size_t n = std::max<std::size_t>(1, std::min(config.workers, config.trials));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (firstError) throw *firstError;

  std::vector<ResultRow> rows;
  for (auto& v : perTrial) rows.insert(rows.end(), std::make_move_iterator(v.begin()), std::make_move_iterator(v.end()));
  return rows;
}

std::vector<ResultRow> run_sweep(const ExperimentConfig& config) {
  if (!config.sweep) throw InvalidArgument("config has no [sweep] section");
  const SweepParameter param = config.sweep->parameter;
  std::vector<ResultRow> all;
  for (double v : config.sweep->values) {
    ExperimentConfig c = config;
    switch (param) {
      case SweepParameter::Lambda: c.unified.lambda = v; break;
      case SweepParameter::EbOverN0Db: c.channel.ebOverN0Db = v, c.channel.snrDb.reset(); break;
      case SweepParameter::SnrDb: c.channel.snrDb = v, c.channel.ebOverN0Db.reset(); break;
      case SweepParameter::Cmax: c.unified.cmax = v; break;
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    c.label = config.label + "/" + std::string(to_string(param)) + "=" + buf;
    auto rows = run_experiment(c);
    all.insert(all.end(), std::make_move_iterator(rows.begin()), std::make_move_iterator(rows.end()));
  }
  return all;
}

}  // namespace isac
