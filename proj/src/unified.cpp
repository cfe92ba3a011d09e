#include <algorithm>
#include <cmath>
#include <cstdio>

#include "isac/unified.hpp"

namespace isac {

namespace {

void check_open_lambda(double lambda) {
  if (!(lambda > 0.0 && lambda < 1.0)) {
    char buf[80];
    std::snprintf(buf, sizeof buf, "lambda must lie in (0, 1), got %g", lambda);
    throw InvalidArgument(buf);
  }
}

void check_reference(double ref, const char* what) {
  if (!(ref != 0.0) || !std::isfinite(ref)) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%s normalization reference is %g", what, ref);
    throw NormalizationError(buf);
  }
}

}  // namespace

CommScenario CommScenario::hard_decision(const Waveform& u, const NoiseModel& noise) {
  double eps = 0.5;
  const std::size_t bits = u.layout.dataBits.size();
  if (bits > 0 && u.layout.kind != ModulationKind::Chirp) {
    const double n0 = noise.psd_at(0.0, u.sampleRate);
    eps = n0 > 0.0 ? ber_theoretical_bpsk(u.energy() / static_cast<double>(bits) / n0) : 0.0;
  }
  CommScenario s;
  s.channel.resize(2, 2);
  s.channel << 1.0 - eps, eps, eps, 1.0 - eps;
  s.inputPmf = {0.5, 0.5};
  return s;
}

double MaxAttainablePolicy::sensing_reference(const Waveform& u, const SensingPrior& prior, const NoiseModel& noise,
                                              double T) const {
  const Band& band = u.band;
  if (!(band.width() > 0.0)) return 0.0;
  const std::size_t q = std::max<std::size_t>(u.size(), 64) + 1;
  const double df = band.width() / static_cast<double>(q - 1);
  const RVec esd(q, u.energy() / band.width());
  RVec var(q), pnn(q);
  for (std::size_t i = 0; i < q; ++i) {
    const double f = band.lo + static_cast<double>(i) * df;
    var[i] = prior.at(f, band);
    pnn[i] = noise.psd_at(f, u.sampleRate);
  }
  return conditional_mi(esd, var, pnn, df, T);
}

double MaxAttainablePolicy::comm_reference(const CommScenario& comm) const {
  return channel_capacity(comm.channel).capacity;
}

SignalScore signal_metric(const Waveform& u, const SensingPrior& prior, const NoiseModel& noise,
                          const CommScenario& comm, double lambda, const NormalizationPolicy& policy, double T,
                          const ClutterHook& clutter) {
  check_open_lambda(lambda);
  if (!(T > 0.0)) T = u.duration();
  SignalScore s;
  s.lambda = lambda;
  s.sensingRaw = conditional_mi(u, prior, noise, T);
  s.commRaw = mutual_information(comm.joint());
  s.normalization.policy = policy.name();
  s.normalization.sensingReference = policy.sensing_reference(u, prior, noise, T);
  s.normalization.commReference = policy.comm_reference(comm);
  check_reference(s.normalization.sensingReference, "sensing");
  check_reference(s.normalization.commReference, "communication");
  s.sensingTerm = s.sensingRaw / s.normalization.sensingReference;
  s.commTerm = s.commRaw / s.normalization.commReference;
  s.value = lambda * s.sensingTerm + (1.0 - lambda) * s.commTerm;
  if (clutter.enabled()) {
    s.clutterTerm = clutter.penalty(u);
    s.clutterWeight = clutter.weight;
    s.value -= clutter.weight * s.clutterTerm;
  }
  return s;
}

std::string_view to_string(PhiKind kind) { return kind == PhiKind::Parameters ? "parameters" : "data"; }

namespace {

EstimatorScore compose(double sensingError, const CommReport& comm, double lambda, const CostLedger& cost,
                       const CostSpec& spec, PhiKind kind) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidArgument("lambda must lie in [0, 1]");
  EstimatorScore s;
  s.sensingError = sensingError;
  s.commError = comm.ber;
  s.lambda = lambda;
  const auto c = cost.cost_vector();
  s.wcost = tally_cost(c, spec.weights, spec.cmax, spec.form);
  s.value = s.wcost * (lambda * s.sensingError + (1.0 - lambda) * s.commError);
  s.kind = kind;
  return s;
}

template <class T>
double mean_squared(std::span<const T> a, std::span<const T> b) {
  if (a.empty() || a.size() != b.size())
    throw LengthError("phi and its estimate must be non-empty and of equal length");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::norm(a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

}  // namespace

EstimatorScore estimator_metric(std::span<const double> phi, std::span<const double> phiHat, const CommReport& comm,
                                double lambda, const CostLedger& cost, const CostSpec& spec, PhiKind kind) {
  return compose(mean_squared(phi, phiHat), comm, lambda, cost, spec, kind);
}

EstimatorScore estimator_metric(std::span<const cplx> phi, std::span<const cplx> phiHat, const CommReport& comm,
                                double lambda, const CostLedger& cost, const CostSpec& spec, PhiKind kind) {
  return compose(mean_squared(phi, phiHat), comm, lambda, cost, spec, kind);
}

std::vector<LambdaRow> sweep_lambda(const SignalScore& base, std::span<const double> grid) {
  std::vector<LambdaRow> rows;
  for (double l : grid) {
    check_open_lambda(l);
    rows.push_back({l, l * base.sensingTerm + (1.0 - l) * base.commTerm - base.clutterWeight * base.clutterTerm});
  }
  return rows;
}

std::vector<LambdaRow> sweep_lambda(const EstimatorScore& base, std::span<const double> grid) {
  std::vector<LambdaRow> rows;
  for (double l : grid) {
    check_open_lambda(l);
    rows.push_back({l, base.wcost * (l * base.sensingError + (1.0 - l) * base.commError)});
  }
  return rows;
}

}  // namespace isac
