#pragma once

// Combined figures of merit. The signal metric weighs normalized sensing
// information against normalized communication information; the estimator
// metric weighs squared estimation error against bit error rate and scales
// the sum by the estimator's resource cost.

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "isac/estimators.hpp"
#include "isac/metrics.hpp"

namespace isac {

/// Discrete input/output model of the communication link: column-stochastic
/// W(y, x) and the input PMF.
struct CommScenario {
  Eigen::MatrixXd channel;
  RVec inputPmf;

  JointPMF joint() const { return JointPMF::from_channel(channel, inputPmf); }
  /// Hard-decision binary symmetric channel with crossover Q(sqrt(2 Eb/N0)),
  /// uniform input. Eb is the waveform energy per data bit and N0 the noise
  /// PSD at DC. Waveforms without data bits give a crossover of 1/2.
  static CommScenario hard_decision(const Waveform& u, const NoiseModel& noise);
};

struct NormalizationRecord {
  std::string policy;
  double sensingReference = 1.0;
  double commReference = 1.0;
};

class NormalizationPolicy {
 public:
  virtual ~NormalizationPolicy() = default;
  virtual std::string name() const = 0;
  virtual double sensing_reference(const Waveform& u, const SensingPrior& prior, const NoiseModel& noise,
                                   double T) const = 0;
  virtual double comm_reference(const CommScenario& comm) const = 0;
};

/// I_s over the sensing MI of a flat spectrum with the same energy across the
/// band; I_c over the channel capacity.
class MaxAttainablePolicy final : public NormalizationPolicy {
 public:
  std::string name() const override { return "max_attainable"; }
  double sensing_reference(const Waveform& u, const SensingPrior& prior, const NoiseModel& noise,
                           double T) const override;
  double comm_reference(const CommScenario& comm) const override;
};

/// User-supplied constants.
class FixedReferencePolicy final : public NormalizationPolicy {
 public:
  FixedReferencePolicy(double sensingRef, double commRef) : s_(sensingRef), c_(commRef) {}
  std::string name() const override { return "fixed"; }
  double sensing_reference(const Waveform&, const SensingPrior&, const NoiseModel&, double) const override {
    return s_;
  }
  double comm_reference(const CommScenario&) const override { return c_; }

 private:
  double s_, c_;
};

/// Optional clutter penalty subtracted from the signal metric. Disabled when
/// weight is 0 or no function is set; the formula is left to the caller.
struct ClutterHook {
  std::function<double(const Waveform&)> penalty;
  double weight = 0.0;
  bool enabled() const { return weight != 0.0 && static_cast<bool>(penalty); }
};

struct SignalScore {
  double sensingRaw = 0.0;   // nats
  double commRaw = 0.0;      // nats
  double sensingTerm = 0.0;  // normalized
  double commTerm = 0.0;     // normalized
  double clutterTerm = 0.0;
  double clutterWeight = 0.0;
  double lambda = 0.5;
  double value = 0.0;
  NormalizationRecord normalization;
};

/// value = lambda * sensingTerm + (1 - lambda) * commTerm (minus the clutter
/// term when the hook is enabled). T <= 0 means the waveform duration.
/// Throws InvalidArgument unless 0 < lambda < 1, NormalizationError for a
/// zero (or non-finite) reference.
SignalScore signal_metric(const Waveform& u, const SensingPrior& prior, const NoiseModel& noise,
                          const CommScenario& comm, double lambda, const NormalizationPolicy& policy,
                          double T = 0.0, const ClutterHook& clutter = {});

enum class PhiKind { Parameters, Data };
std::string_view to_string(PhiKind kind);

struct CostSpec {
  RVec weights{1.0, 0.0, 0.0, 0.0};
  double cmax = 1.0;
  CostForm form = CostForm::FpeLike;
};

struct EstimatorScore {
  double sensingError = 0.0;  // mean squared phi error
  double commError = 0.0;     // BER
  double lambda = 0.5;
  double wcost = 1.0;
  double value = 0.0;
  PhiKind kind = PhiKind::Parameters;
};

/// wcost * (lambda * mean|phi - phihat|^2 + (1 - lambda) * BER). Throws
/// LengthError for empty or mismatched phi, InvalidArgument for lambda
/// outside [0, 1]; tally_cost errors propagate.
EstimatorScore estimator_metric(std::span<const double> phi, std::span<const double> phiHat, const CommReport& comm,
                                double lambda, const CostLedger& cost, const CostSpec& spec,
                                PhiKind kind = PhiKind::Parameters);
EstimatorScore estimator_metric(std::span<const cplx> phi, std::span<const cplx> phiHat, const CommReport& comm,
                                double lambda, const CostLedger& cost, const CostSpec& spec,
                                PhiKind kind = PhiKind::Data);

struct LambdaRow {
  double lambda = 0.0;
  double value = 0.0;
};

/// Re-weights fixed constituent terms over a lambda grid, one row per entry
/// in grid order. Throws InvalidArgument for lambda outside (0, 1).
std::vector<LambdaRow> sweep_lambda(const SignalScore& base, std::span<const double> grid);
std::vector<LambdaRow> sweep_lambda(const EstimatorScore& base, std::span<const double> grid);

}  // namespace isac
