#pragma once

// Cooperative localization and synchronization of a network of apertures.
// Pairwise measurements (delay, angle of arrival, carrier phase) feed a
// factor graph; particle-based loopy belief propagation returns per-agent
// beliefs, from which MAP / MMSE states are read off.
//
// Internal coordinates of the inferred state, in this order:
//   x, y (m), orientation (rad), c * time offset (m), carrier phase offset (rad).

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "isac/common.hpp"

namespace isac::sync {

inline constexpr double kSpeedOfLight = 299792458.0;

struct ApertureState {
  int id = 0;
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  double orientation = 0.0;  // rad
  Eigen::Vector2d velocity = Eigen::Vector2d::Zero();
  double timeOffset = 0.0;  // s
  double cfo = 0.0;         // Hz
  double cpo = 0.0;         // rad

  /// Wraps orientation and CPO to (-pi, pi].
  void normalize();
};

enum class Component { X = 0, Y, Orientation, TimeOffset, Phase };
inline constexpr std::size_t kNumComponents = 5;
std::string_view to_string(Component c);
bool is_circular(Component c);
/// Internal coordinate of a state (time offset scaled by c).
double component_value(const ApertureState& s, Component c);
void set_component(ApertureState& s, Component c, double v);

/// Which state components are inferred; the rest are taken as known.
struct StateMask {
  std::array<bool, kNumComponents> inferred{true, true, true, true, false};
  std::vector<Component> components() const;
  bool has(Component c) const { return inferred[static_cast<std::size_t>(c)]; }
};

struct NetworkTopology {
  std::vector<int> ids;  // sorted, unique
  std::set<int> anchors;
  std::vector<std::pair<int, int>> mask;  // measured ordered pairs (tx, rx)

  static NetworkTopology full_mesh(std::vector<int> ids, std::set<int> anchors);
  /// Both directions between every agent and every anchor, no agent-agent pairs.
  static NetworkTopology star(std::vector<int> ids, std::set<int> anchors);
  std::vector<int> agents() const;
  bool is_anchor(int id) const { return anchors.count(id) != 0; }
  /// Every ordered pair (j, j'), j != j': J(J-1) entries.
  std::vector<std::pair<int, int>> all_pairs() const;
  /// Throws TopologyError on duplicate ids, unknown anchors or invalid mask pairs.
  void validate() const;
};

struct ObservableSet {
  bool delay = true;
  bool angle = true;
  bool phase = false;
};

struct MeasurementNoise {
  double delayStd = 1e-9;  // s
  double angleStd = 1e-2;  // rad
  double phaseStd = 1e-1;  // rad
};

/// Measurement from transmitter `tx` at receiver `rx`:
///   delay = |p_tx - p_rx| / c + (TO_rx - TO_tx)
///   angle = bearing of tx seen from rx, minus the orientation of rx
///   phase = 2 pi f_c |p_tx - p_rx| / c + (CPO_rx - CPO_tx)
/// Angles wrapped to (-pi, pi].
struct PairMeasurement {
  int tx = 0;
  int rx = 0;
  double delay = 0.0;
  double angle = 0.0;
  double phase = 0.0;
  MeasurementNoise noiseStd;
};

struct ForwardModel {
  ObservableSet observables;
  MeasurementNoise noise;
  double carrierFrequency = 3.5e9;  // Hz
};

/// Noise-free observables of one pair.
PairMeasurement predict_measurement(const ApertureState& tx, const ApertureState& rx, const ForwardModel& model);

/// One measurement per masked pair, in mask order. Pair k draws its noise from
/// derive_seed(seed, k, "measurement"); noiseScale = 0 gives exact values.
std::vector<PairMeasurement> simulate_measurements(const NetworkTopology& topology,
                                                   const std::vector<ApertureState>& truth,
                                                   const ForwardModel& model, std::uint64_t seed,
                                                   double noiseScale = 1.0);

enum class PriorKind { Uniform, Gaussian, PointMass };

struct ComponentPrior {
  PriorKind kind = PriorKind::Uniform;
  double a = 0.0;  // uniform lower bound, Gaussian mean or point value
  double b = 0.0;  // uniform upper bound or Gaussian std

  static ComponentPrior uniform(double lo, double hi) { return {PriorKind::Uniform, lo, hi}; }
  static ComponentPrior gaussian(double mean, double stddev) { return {PriorKind::Gaussian, mean, stddev}; }
  static ComponentPrior point(double v) { return {PriorKind::PointMass, v, 0.0}; }

  double log_density(double v, bool circular) const;
  double sample(Rng& rng) const;
  /// Standard deviation of the prior (0 for a point mass).
  double spread() const;
};

/// Prior of one aperture. Anchors are point masses at `nominal`; agents use
/// `components` for the inferred coordinates and `nominal` for the rest.
struct AperturePrior {
  int id = 0;
  bool anchor = false;
  ApertureState nominal;
  std::array<ComponentPrior, kNumComponents> components{};
};

struct FactorNode {
  enum class Kind { Prior, Pair } kind = Kind::Prior;
  int a = 0;                    // prior: the aperture; pair: transmitter
  int b = -1;                   // pair: receiver
  std::size_t measurement = 0;  // index into FactorGraph::measurements
};

struct FactorGraph {
  std::vector<int> variables;  // aperture ids, anchors included
  std::vector<FactorNode> factors;
  std::map<int, std::vector<std::size_t>> incidence;  // variable -> factor indices
  std::map<int, AperturePrior> priors;
  std::vector<PairMeasurement> measurements;
  ForwardModel model;
  StateMask mask;

  std::size_t prior_factor_count() const;
  std::size_t pair_factor_count() const;
  /// Acyclicity of the graph over agent variables; anchors are known, so
  /// factors touching them act as unary factors and close no loops.
  bool is_tree() const;
};

/// Throws TopologyError when a prior is missing, a measurement refers to an
/// unknown or unmasked pair, or a masked pair has no measurement.
FactorGraph build_factor_graph(const NetworkTopology& topology, const std::vector<AperturePrior>& priors,
                               const std::vector<PairMeasurement>& measurements, const ForwardModel& model,
                               const StateMask& mask = {});

/// ln f(z | theta_tx, theta_rx) with noise standard deviations multiplied by
/// sigmaScale.
double pair_log_likelihood(const PairMeasurement& z, const ApertureState& tx, const ApertureState& rx,
                           const ForwardModel& model, double sigmaScale = 1.0);

/// ln of the unnormalized joint posterior: every prior factor plus every pair
/// factor evaluated at the given states (anchors must sit at their nominal).
double log_joint(const FactorGraph& graph, const std::map<int, ApertureState>& states);

struct BPConfig {
  std::size_t particleCount = 1000;
  std::size_t maxIterations = 50;
  double messageTol = 1e-6;        // max change of belief means (internal units)
  double resampleThreshold = 0.5;  // resample when ESS < threshold * N
  double damping = 0.5;            // log-domain weight of the previous message
  double annealStart = 0.0;        // kappa; 0 picks it from the prior spread
  double annealRate = 0.7;         // rho
  double priorMixture = 0.1;       // share of the proposal drawn from the prior
  std::size_t messageParticles = 128;  // neighbour particles per message
  std::size_t workers = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Belief {
  int id = 0;
  std::vector<Component> components;
  Eigen::MatrixXd particles;  // N x D, internal units
  RVec weights;               // sum 1
  ApertureState base;         // values of components not inferred
  std::size_t iteration = 0;
  double ess = 0.0;

  ApertureState state_of(Eigen::Index particle) const;
};

struct BPResult {
  std::map<int, Belief> beliefs;  // agents and anchors
  std::size_t iterations = 0;
  bool converged = false;
  RVec maxChange;  // per iteration
  RVec annealing;  // sigma multiplier per iteration
};

/// Synchronous particle sum-product on the factor graph. Iteration t uses the
/// previous round's beliefs; agent j draws from derive_seed(seed, t, "agent:<j>")
/// so results do not depend on the worker count. Noise widths are annealed as
/// sigma * max(1, kappa rho^t). Throws DegeneracyError when every weight of a
/// belief underflows.
BPResult run_loopy_bp(const FactorGraph& graph, const BPConfig& config);

/// Weighted mean; circular mean for orientation and phase. EmptyBelief on an
/// empty or unnormalizable belief.
ApertureState estimate_mmse(const Belief& belief);
/// Particle of highest kernel density, Gaussian kernel with Silverman's
/// bandwidth h_d = sigma_d (4 / ((D + 2) N_eff))^{1/(D+4)}.
ApertureState estimate_map(const Belief& belief);
/// Silverman bandwidths used by estimate_map.
RVec kde_bandwidth(const Belief& belief);

struct AgentError {
  int id = 0;
  double position = 0.0;     // m
  double orientation = 0.0;  // rad, wrapped
  double timeOffset = 0.0;   // s
  double cfo = 0.0;          // Hz
  double cpo = 0.0;          // rad, wrapped
};

struct SyncReport {
  std::vector<AgentError> agents;  // sorted by id
  double rmsPosition = 0.0;
  /// max over pairs |(TO_j - TO_j')_est - (TO_j - TO_j')_true|: the identifiable
  /// quantity when no anchor fixes the common clock.
  double maxRelativeTimeOffsetError = 0.0;
};

/// Signed errors estimate - truth. Throws IdMismatch unless both maps hold the
/// same ids.
SyncReport sync_error_report(const std::map<int, ApertureState>& estimates,
                             const std::map<int, ApertureState>& truth);

struct RankDiagnostics {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t rank = 0;
  RVec singularValues;
  bool full_rank() const { return rank == cols; }
};

/// Numeric Jacobian of every used observable (delays scaled by c) with respect
/// to every inferred agent coordinate, evaluated at `states`.
RankDiagnostics jacobian_rank(const FactorGraph& graph, const std::map<int, ApertureState>& states);

/// Network scenario file contents.
struct NetworkScenario {
  std::string label;
  NetworkTopology topology;
  std::vector<ApertureState> truth;
  std::vector<AperturePrior> priors;
  ForwardModel model;
  StateMask mask;
  BPConfig bp;
  double noiseScale = 1.0;  // 0 simulates noiseless measurements
};

/// Throws ParseError / ValidationError listing every problem.
NetworkScenario parse_network(std::string_view text, const std::string& origin = "<network>");
NetworkScenario load_network(const std::filesystem::path& path);

}  // namespace isac::sync
