#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "isac/common.hpp"
#include "isac/waveform.hpp"

namespace isac {

/// Delay-Doppler dictionary: one unit-norm atom per grid cell, the received
/// vector a single unit-gain scatterer at (delay, Doppler) would produce for
/// the probe waveform. Cells are ordered Doppler-major:
/// index = dopplerIndex * numDelays + delayIndex.
class Dictionary {
 public:
  /// Throws InvalidArgument if a grid is empty or not strictly increasing, or
  /// if rxLength is shorter than the probe.
  Dictionary(const Waveform& probe, RVec delayGrid, RVec dopplerGrid, std::size_t rxLength);

  /// Dictionary over caller-supplied atoms (normalized on entry). Used for
  /// synthetic sensing matrices; there is no probe waveform.
  static Dictionary from_atoms(RVec delayGrid, RVec dopplerGrid, std::vector<CVec> atoms, double sampleRate);

  std::size_t size() const { return numDelays_ * numDopplers_; }
  std::size_t num_delays() const { return numDelays_; }
  std::size_t num_dopplers() const { return numDopplers_; }
  std::size_t rx_length() const { return rxLength_; }
  double sample_rate() const { return sampleRate_; }

  std::size_t index(std::size_t delayIdx, std::size_t dopplerIdx) const {
    return dopplerIdx * numDelays_ + delayIdx;
  }
  std::size_t delay_index(std::size_t idx) const { return idx % numDelays_; }
  std::size_t doppler_index(std::size_t idx) const { return idx / numDelays_; }
  double delay(std::size_t idx) const { return delayGrid_[delay_index(idx)]; }
  double doppler(std::size_t idx) const { return dopplerGrid_[doppler_index(idx)]; }
  const RVec& delay_grid() const { return delayGrid_; }
  const RVec& doppler_grid() const { return dopplerGrid_; }

  std::span<const cplx> atom(std::size_t idx) const {
    return {atoms_.data() + idx * rxLength_, rxLength_};
  }
  /// Norm of the unnormalized predicted vector (sqrt of its sample energy).
  double atom_norm(std::size_t idx) const { return norms_[idx]; }

  const std::optional<Waveform>& probe() const { return probe_; }
  std::uint64_t synthesis_flops() const { return synthesisFlops_; }

  /// max_{i != j} |<a_i, a_j>|. Computed on first use and cached.
  double coherence() const;

  /// Spectral grid the dictionary separates its models on. Defaults to the
  /// probe's subcarrier count for OFDM probes, otherwise min(64, probe
  /// length); the band defaults to the probe band.
  std::size_t frequency_bins() const { return frequencyBins_; }
  void set_frequency_bins(std::size_t bins);
  const Band& band() const { return band_; }
  void set_band(Band band) { band_ = band; }
  /// Bins (FFT order on a frequency_bins()-point grid) whose centre lies in band().
  std::vector<std::size_t> required_frequency_bins() const;
  /// Number of slow-time slots needed to separate Doppler cells; 0 when the
  /// dictionary has a single Doppler cell.
  std::size_t time_slots() const { return numDopplers_ > 1 ? numDopplers_ : 0; }

 private:
  Dictionary() = default;
  void check_grids() const;

  RVec delayGrid_;
  RVec dopplerGrid_;
  std::size_t numDelays_ = 0;
  std::size_t numDopplers_ = 0;
  std::size_t rxLength_ = 0;
  double sampleRate_ = 1.0;
  CVec atoms_;
  RVec norms_;
  std::optional<Waveform> probe_;
  std::uint64_t synthesisFlops_ = 0;
  std::size_t frequencyBins_ = 64;
  Band band_;

  struct CoherenceCache;
  std::shared_ptr<CoherenceCache> coherence_;
};

}  // namespace isac
