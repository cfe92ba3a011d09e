#pragma once

// Sensing estimators (matched filter, OMP, MUSIC) and communication
// demodulation. Every estimator returns an EstimateReport carrying a
// CostLedger of what it consumed.
//
// Flop convention: one complex multiply-accumulate is one counted operation,
// an L-point FFT costs L*log2(L).

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "isac/common.hpp"
#include "isac/dictionary.hpp"
#include "isac/scene.hpp"
#include "isac/waveform.hpp"

namespace isac {

struct CostLedger {
  std::uint64_t flopCount = 0;
  std::uint64_t timeSamplesUsed = 0;
  std::uint64_t spectralBinsUsed = 0;
  double occupiedBandwidth = 0.0;  // Hz
  std::vector<std::string> aprioriInputs;

  static constexpr std::array<std::string_view, 4> kLabels = {"flops", "time_samples", "spectral_bins",
                                                              "apriori_inputs"};
  /// C_k in the order of kLabels.
  std::array<double, 4> cost_vector() const;
};

struct EstimatedTarget {
  cplx amplitude;
  double delay = 0.0;
  double doppler = 0.0;
  std::size_t cell = 0;  // dictionary index
  double score = 0.0;    // detection statistic or pseudospectrum value
};

struct EstimateReport {
  std::string estimator;
  std::vector<EstimatedTarget> targets;
  CVec predictedSignal;
  Bits decodedBits;
  double residualEnergy = 0.0;  // sum |rx - predicted|^2
  RVec residualHistory;         // OMP: residual energy after each iteration (index 0 = rx)
  RVec eigenvalues;             // MUSIC: covariance eigenvalues, descending
  RVec surface;                 // detection surface over the dictionary (Doppler-major)
  CostLedger cost;
  std::map<std::string, std::string> capabilities;
};

/// Correlator bank over the dictionary grid. The surface holds |chi|, the
/// cross-ambiguity magnitude sum rx conj(u_cell) dt, so a noiseless unit
/// target on a grid cell fully inside the window reads the waveform energy.
/// Local maxima (8-neighbourhood) within thresholdDb (power, relative to the
/// peak) of the strongest cell are reported, amplitudes from the correlator.
/// Integer-sample delay grids use FFT correlation; fractional grids correlate
/// against the dictionary atoms directly.
EstimateReport matched_filter_estimate(const ReceivedSignal& rx, const Waveform& u, const Dictionary& dict,
                                       double thresholdDb = -13.0);

/// Orthogonal matching pursuit with `sparsity` iterations. Stops early if
/// the residual becomes exactly orthogonal to every atom. Throws RankError
/// when the selected atoms have condition number above 1e12.
EstimateReport omp_estimate(const ReceivedSignal& rx, const Dictionary& dict, std::size_t sparsity);

struct MusicOptions {
  std::size_t windowSubcarriers = 0;  // 0 = half the active band
  std::size_t windowSymbols = 0;      // 0 = half the symbol count
};

/// 2-D MUSIC on the per-resource-element channel D[k,m] = Y[k,m] / X[k,m] of
/// an OFDM probe, with sliding-window smoothing over (subcarrier, symbol).
/// Requires the dictionary's probe to be OFDM with a contiguous active band
/// (LayoutError otherwise). Throws OrderError if modelOrder is 0 or not below
/// the covariance dimension.
EstimateReport music_estimate(const ReceivedSignal& rx, std::size_t modelOrder, const Dictionary& grids,
                              const MusicOptions& options = {});

/// Equalizes with the channel estimate and hard-decides the data bits.
/// PSK: derotate and re-align on the strongest estimated path, integrate each
/// symbol and slice. OFDM: one-tap equalizer per resource element built from
/// all estimated paths. An empty estimate means the identity channel.
/// Throws LayoutError for waveforms without a data layout.
Bits demodulate(const ReceivedSignal& rx, const Waveform& u, const EstimateReport& channelEstimate);

enum class CostForm { FpeLike, Additive };
std::string_view to_string(CostForm form);

/// w_cost. With S = sum_k w_k C_k / cmax:
///   FPE-like: (1 + S) / (1 - S), SaturationError when S >= 1;
///   additive: 1 + S.
/// Throws WeightError unless the weights are >= 0 and sum to 1 within 1e-9.
double tally_cost(std::span<const double> costs, std::span<const double> weights, double cmax, CostForm form);
double tally_cost(const EstimateReport& report, std::span<const double> weights, double cmax, CostForm form);

/// sum_i |a_i - b_i|^2.
double residual_energy(std::span<const cplx> a, std::span<const cplx> b);

}  // namespace isac
