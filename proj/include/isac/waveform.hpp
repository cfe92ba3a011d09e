#pragma once

// Transmit signal generation (single-carrier PSK, CP-OFDM, linear FM) and the
// signal-structure criteria that only need the waveform itself: PAPR, the
// spectrum profile and the informativeness (spectral support) check.

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "isac/common.hpp"

namespace isac {

class Dictionary;

enum class ModulationKind { SingleCarrierPsk, Ofdm, Chirp };

std::string_view to_string(ModulationKind kind);

/// Frequency interval [lo, hi] in Hz.
struct Band {
  double lo = 0.0;
  double hi = 0.0;
  double width() const { return hi - lo; }
  bool contains(double f, double tol = 0.0) const { return f >= lo - tol && f <= hi + tol; }
};

/// Resource layout of a frame. OFDM cells are indexed cell = m * K + k for
/// subcarrier k (FFT order) and OFDM symbol m.
struct ModulationLayout {
  ModulationKind kind = ModulationKind::SingleCarrierPsk;
  int bitsPerSymbol = 1;
  std::size_t oversampling = 1;  // single-carrier only
  std::size_t numSubcarriers = 0;
  std::size_t numSymbols = 0;
  std::size_t cpLength = 0;
  std::vector<std::uint8_t> pilotMask;
  std::vector<std::size_t> activeSubcarriers;
  Bits dataBits;
  double chirpBandwidth = 0.0;

  bool is_active(std::size_t k) const;
  bool is_pilot(std::size_t k, std::size_t m) const { return pilotMask[m * numSubcarriers + k] != 0; }
  bool is_data(std::size_t k, std::size_t m) const { return is_active(k) && !is_pilot(k, m); }
  std::size_t data_cells() const;
  std::size_t symbol_length() const { return numSubcarriers + cpLength; }

  /// Throws LayoutError describing the first inconsistency.
  void validate() const;
};

struct Waveform {
  CVec samples;
  double sampleRate = 1.0;
  Band band;
  ModulationLayout layout;

  std::size_t size() const { return samples.size(); }
  double duration() const { return static_cast<double>(samples.size()) / sampleRate; }
  /// sum |u|^2 over samples (sample-domain energy).
  double sample_energy() const;
  /// Physical energy: sum |u|^2 * dt, in joules for u in sqrt(W).
  double energy() const { return sample_energy() / sampleRate; }
};

// --- constellation ---------------------------------------------------------

/// Gray-mapped unit-energy PSK. BPSK: 0 -> +1, 1 -> -1. QPSK: (b0, b1) ->
/// ((1 - 2 b0) + j (1 - 2 b1)) / sqrt(2).
cplx map_symbol(std::span<const std::uint8_t> bits, int bitsPerSymbol);
/// Hard decision inverse of map_symbol; appends bitsPerSymbol bits.
void demap_hard(cplx symbol, int bitsPerSymbol, Bits& out);

/// Fixed pilot sequence: x^7 + x^4 + 1 LFSR seeded with 0x7F, two output bits
/// per pilot mapped through the QPSK Gray map.
CVec pilot_sequence(std::size_t count);

// --- generators ------------------------------------------------------------

/// Rectangular-pulse PSK, bitsPerSymbol in {1, 2}; each symbol spans
/// `oversampling` samples of amplitude 1/sqrt(oversampling) (unit energy per
/// symbol). Throws LengthError if bits.size() is not a multiple of
/// bitsPerSymbol.
Waveform generate_psk_frame(const Bits& bits, int bitsPerSymbol, double sampleRate,
                            std::size_t oversampling = 1);

/// Layout with all K subcarriers active and pilots on every `pilotSpacing`-th
/// subcarrier of every symbol (0 = no pilots). Data bits left empty.
ModulationLayout make_ofdm_layout(std::size_t numSubcarriers, std::size_t numSymbols,
                                  int bitsPerSymbol, std::size_t pilotSpacing = 0);

/// CP-OFDM frame with a unitary K-point IDFT per symbol. cpLength overrides
/// layout.cpLength. Throws LayoutError on inconsistent layouts.
Waveform generate_ofdm(ModulationLayout layout, double sampleRate, std::size_t cpLength);

/// Unit-amplitude linear FM sweeping -B/2 .. +B/2 over `duration`.
Waveform generate_chirp(double bandwidth, double duration, double sampleRate);

// --- structure criteria ----------------------------------------------------

struct PaprResult {
  double ratio = 1.0;
  double db = 0.0;
};

/// max |u|^2 / mean |u|^2. Throws ZeroSignalError on an all-zero signal.
PaprResult papr(std::span<const cplx> u);
inline PaprResult papr(const Waveform& u) { return papr(u.samples); }

/// Periodogram PSD (W/Hz) on an nfft-point grid in FFT order. With nfft = 0
/// the signal length is used. Sum(psd) * binWidth equals mean power.
struct SpectrumProfile {
  RVec psd;
  double binWidth = 0.0;
  double sampleRate = 0.0;

  double frequency(std::size_t k) const;
  /// Band-integrated power, sum psd * binWidth.
  double total_power() const;
};

SpectrumProfile spectrum_profile(const Waveform& u, std::size_t nfft = 0);

/// Mean |X[k,m]|^2 over OFDM symbols after CP removal (length K, FFT order).
RVec subcarrier_power(const Waveform& u);

/// OFDM receiver front end: removes the CP of each symbol starting at
/// `offset` and returns the unitary-DFT grid, cell = m*K + k.
CVec ofdm_grid(std::span<const cplx> rx, const ModulationLayout& layout, std::size_t offset = 0);

struct SupportBin {
  enum class Domain { Frequency, Time } domain = Domain::Frequency;
  std::size_t index = 0;
  friend bool operator==(const SupportBin&, const SupportBin&) = default;
};

struct InformativenessReport {
  std::vector<SupportBin> occupiedBins;
  std::vector<SupportBin> requiredBins;
  std::vector<SupportBin> gapList;
  bool isInformative = false;
  double thresholdDb = -40.0;
};

/// Flags every bin the dictionary needs to tell its cells apart on whose
/// signal energy falls more than |thresholdDb| below the strongest bin.
/// Frequency bins come from the dictionary's spectral grid; time slots are
/// required only when the dictionary spans more than one Doppler cell.
InformativenessReport informativeness_check(const Waveform& u, const Dictionary& dict,
                                            double thresholdDb = -40.0);

// --- I/O -------------------------------------------------------------------

/// Writes `<base>.bin` (interleaved little-endian float64 re, im) and
/// `<base>.hdr` (key = value text: sample_rate, duration, band_lo, band_hi,
/// samples and the layout fields).
void write_waveform(const Waveform& u, const std::filesystem::path& base);
Waveform read_waveform(const std::filesystem::path& base);

}  // namespace isac
