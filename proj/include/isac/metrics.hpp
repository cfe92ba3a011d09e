#pragma once

// Classical metrics: estimation error and its bound, bit/symbol error rates,
// information measures, the ambiguity function and the system-identification
// scores. Logarithms are natural; information is in nats.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "isac/common.hpp"
#include "isac/scene.hpp"
#include "isac/waveform.hpp"

namespace isac {

// --- estimation ------------------------------------------------------------

/// Flat real parameter vector with one label per coordinate, e.g.
/// {"re_h0", "im_h0", "tau0", "nu0", ...}.
struct ParameterVector {
  RVec values;
  std::vector<std::string> layout;

  std::size_t size() const { return values.size(); }
  /// (re h, im h, delay, Doppler) per target, in scene order.
  static ParameterVector from_targets(std::span<const Target> targets);
  void check() const;
};

struct MseResult {
  Eigen::MatrixXd matrix;
  double trace = 0.0;
};

/// (1/N) sum_k (theta - theta_k)(theta - theta_k)^T. Throws LayoutMismatch if
/// an estimate's layout differs from the truth's, InvalidArgument if empty.
MseResult mse_sample(const ParameterVector& truth, std::span<const ParameterVector> estimates);

/// ln p(data | theta) for one fixed data realization.
using LogLikelihood = std::function<double(std::span<const double>)>;
/// Draws a data realization from the model at the true parameters and returns
/// its log-likelihood function. Called once per Monte Carlo trial.
using LikelihoodSampler = std::function<LogLikelihood(std::uint64_t trialSeed)>;

struct CrlbOptions {
  std::size_t mcTrials = 1000;
  double relStep = 1e-5;
  /// Per-coordinate scale used for the step when theta_i is zero; the step
  /// is relStep * max(|theta_i|, scale_i). Empty means all ones.
  RVec scales;
  std::uint64_t seed = 0;
};

/// Monte Carlo average of the negative central-difference Hessian of the
/// log-likelihood at theta0. Trial t draws data with derive_seed(seed, t, "crlb").
Eigen::MatrixXd fisher_numeric(const LikelihoodSampler& sampler, std::span<const double> theta0,
                               const CrlbOptions& options = {});

/// Inverse of fisher_numeric. Throws SingularFisher when the Fisher matrix,
/// scaled to unit diagonal, has condition number above 1e12 (or a
/// non-positive diagonal entry).
Eigen::MatrixXd crlb_numeric(const LikelihoodSampler& sampler, std::span<const double> theta0,
                             const CrlbOptions& options = {});

/// Condition number of F after diagonal scaling D^{-1/2} F D^{-1/2}.
double scaled_condition(const Eigen::MatrixXd& fisher);

// --- communication ---------------------------------------------------------

/// Q(x) = erfc(x / sqrt 2) / 2.
double q_function(double x);
/// Q(sqrt(2 Eb/N0)). Throws InvalidArgument for a negative ratio.
double ber_theoretical_bpsk(double ebOverN0);

struct CommReport {
  std::uint64_t bitsTransmitted = 0;
  std::uint64_t bitErrors = 0;
  std::uint64_t symbolsTransmitted = 0;
  std::uint64_t symbolErrors = 0;
  double ber = 0.0;
  double ser = 0.0;
  double ebOverN0Db = 0.0;

  /// Compares bit vectors symbol by symbol. Throws LengthError on mismatch.
  static CommReport from_bits(const Bits& sent, const Bits& received, int bitsPerSymbol, double ebOverN0Db = 0.0);
};

// --- information -----------------------------------------------------------

/// Joint PMF p(x, y): rows index x, columns index y.
class JointPMF {
 public:
  /// Throws InvalidArgument unless entries are >= 0 and sum to 1 within 1e-12.
  explicit JointPMF(Eigen::MatrixXd p, std::vector<std::string> xLabels = {}, std::vector<std::string> yLabels = {});
  /// p(x, y) = p(x) W(y | x) for a column-stochastic W(y, x).
  static JointPMF from_channel(const Eigen::MatrixXd& channel, std::span<const double> inputPmf);

  const Eigen::MatrixXd& matrix() const { return p_; }
  Eigen::VectorXd marginal_x() const { return p_.rowwise().sum(); }
  Eigen::VectorXd marginal_y() const { return p_.colwise().sum().transpose(); }
  JointPMF transposed() const;
  const std::vector<std::string>& x_labels() const { return xLabels_; }
  const std::vector<std::string>& y_labels() const { return yLabels_; }

 private:
  Eigen::MatrixXd p_;
  std::vector<std::string> xLabels_, yLabels_;
};

/// sum p(x,y) ln(p(x,y) / (p(x) p(y))), with 0 ln 0 = 0.
double mutual_information(const JointPMF& p);

struct CapacityResult {
  double capacity = 0.0;  // nats
  RVec inputPmf;
  int iterations = 0;
  double gap = 0.0;  // final upper - lower bound
};

/// Blahut-Arimoto on a column-stochastic channel W(y, x) (each column a PMF
/// over outputs). Iterates until the upper/lower capacity bounds are within
/// tol. Throws NonStochasticChannel on negative entries or columns not
/// summing to 1 within 1e-9.
CapacityResult channel_capacity(const Eigen::MatrixXd& channel, double tol = 1e-9, int maxIterations = 10000);

/// T * integral over the band of ln(1 + 2 |U(f)|^2 sigma_g^2(f) / (P_nn(f) T)) df
/// by trapezoid quadrature on a uniform grid spanning the band edges.
/// |U(f)|^2 is the energy spectral density sum u[n] e^{-j2pi f n dt} dt.
/// Throws DivisionError where P_nn = 0 under nonzero signal.
double conditional_mi(const Waveform& u, const SensingPrior& prior, const NoiseModel& noise, double T);

/// Same integral from sampled spectra on a common uniform grid of spacing df.
double conditional_mi(std::span<const double> esd, std::span<const double> spectralVariance,
                      std::span<const double> noisePsd, double df, double T);

double nats_to_bits(double nats);
double bits_to_nats(double bits);

// --- ambiguity -------------------------------------------------------------

struct AmbiguityMap {
  Eigen::MatrixXd values;  // rows: Doppler, columns: delay
  RVec delayGrid;          // s
  RVec dopplerGrid;        // Hz

  /// Grid-summed |A|^2 weighted by the cell areas (delay step times the
  /// Doppler cell width, midpoint rule for non-uniform grids).
  double volume() const;
  double at(double delay, double doppler) const;
};

/// |sum_n u[n] e^{j2pi nu n dt} conj(u[n - d]) dt| with delays d dt on the
/// sample grid (negative delays allowed). Throws GridError for off-grid
/// delays, |delay| >= duration, or |nu| > fs/2.
AmbiguityMap ambiguity(const Waveform& u, const RVec& delayGrid, const RVec& dopplerGrid);

/// Delay grid covering every lag -(N-1)..(N-1) and a Doppler grid of L >= 2N-1
/// uniform cells spanning [-fs/2, fs/2): the grid on which the discretized
/// volume is exact.
std::pair<RVec, RVec> full_ambiguity_grids(const Waveform& u);

// --- system identification -------------------------------------------------

/// 1 - SSE/SST clamped to [0, 1]. Throws DegenerateData when y is constant,
/// LengthError on unequal or short inputs.
double r_squared(std::span<const double> y, std::span<const double> yhat);

/// ((1 + d/N)/(1 - d/N)) * mean squared residual. DimensionError if d >= N.
double fpe(std::span<const double> y, std::span<const double> yhat, std::size_t modelDim);

enum class Loss { Squared, Absolute };
/// (1 + U_N) * mean loss(y - yhat).
double cost_criterion(std::span<const double> y, std::span<const double> yhat, double penalty, Loss loss);

}  // namespace isac
