#include "isac/waveform.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "isac/dictionary.hpp"
#include "isac/fft.hpp"
#include "isac/kernels.hpp"

namespace isac {

std::string_view to_string(ModulationKind kind) {
  switch (kind) {
    case ModulationKind::SingleCarrierPsk: return "psk";
    case ModulationKind::Ofdm: return "ofdm";
    case ModulationKind::Chirp: return "chirp";
  }
  return "unknown";
}

bool ModulationLayout::is_active(std::size_t k) const {
  return std::binary_search(activeSubcarriers.begin(), activeSubcarriers.end(), k);
}

std::size_t ModulationLayout::data_cells() const {
  std::size_t n = 0;
  for (std::size_t m = 0; m < numSymbols; ++m)
    for (std::size_t k : activeSubcarriers)
      if (!is_pilot(k, m)) ++n;
  return n;
}

void ModulationLayout::validate() const {
  if (bitsPerSymbol != 1 && bitsPerSymbol != 2)
    throw LayoutError("bitsPerSymbol must be 1 or 2, got " + std::to_string(bitsPerSymbol));
  if (kind != ModulationKind::Ofdm) return;
  const std::size_t K = numSubcarriers;
  if (K == 0 || numSymbols == 0) throw LayoutError("OFDM layout needs subcarriers and symbols");
  if (activeSubcarriers.empty()) throw LayoutError("OFDM layout has no active subcarriers");
  if (!std::is_sorted(activeSubcarriers.begin(), activeSubcarriers.end()) ||
      std::adjacent_find(activeSubcarriers.begin(), activeSubcarriers.end()) != activeSubcarriers.end())
    throw LayoutError("active subcarriers must be sorted and unique");
  if (activeSubcarriers.back() >= K) throw LayoutError("active subcarrier index out of range");
  if (pilotMask.size() != K * numSymbols)
    throw LayoutError("pilot mask size " + std::to_string(pilotMask.size()) + " != K*M = " +
                      std::to_string(K * numSymbols));
  for (std::size_t m = 0; m < numSymbols; ++m)
    for (std::size_t k = 0; k < K; ++k)
      if (is_pilot(k, m) && !is_active(k))
        throw LayoutError("pilot on inactive subcarrier " + std::to_string(k));
  if (cpLength >= K) throw LayoutError("cyclic prefix must be shorter than the symbol");
  const std::size_t expected = data_cells() * static_cast<std::size_t>(bitsPerSymbol);
  if (dataBits.size() != expected)
    throw LayoutError("layout carries " + std::to_string(dataBits.size()) + " data bits, needs " +
                      std::to_string(expected));
}

double Waveform::sample_energy() const { return kernels::energy(samples); }

// --- constellation ---------------------------------------------------------

cplx map_symbol(std::span<const std::uint8_t> bits, int bitsPerSymbol) {
  if (bitsPerSymbol == 1) return {bits[0] ? -1.0 : 1.0, 0.0};
  const double s = 1.0 / std::numbers::sqrt2;
  return {bits[0] ? -s : s, bits[1] ? -s : s};
}

void demap_hard(cplx symbol, int bitsPerSymbol, Bits& out) {
  out.push_back(symbol.real() < 0.0 ? 1 : 0);
  if (bitsPerSymbol == 2) out.push_back(symbol.imag() < 0.0 ? 1 : 0);
}

CVec pilot_sequence(std::size_t count) {
  CVec out;
  out.reserve(count);
  unsigned state = 0x7F;
  auto next_bit = [&state] {
    const unsigned bit = ((state >> 6) ^ (state >> 3)) & 1U;
    state = ((state << 1) | bit) & 0x7FU;
    return static_cast<std::uint8_t>(bit);
  };
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint8_t b[2] = {next_bit(), next_bit()};
    out.push_back(map_symbol(b, 2));
  }
  return out;
}

// --- generators ------------------------------------------------------------

Waveform generate_psk_frame(const Bits& bits, int bitsPerSymbol, double sampleRate,
                            std::size_t oversampling) {
  if (bitsPerSymbol != 1 && bitsPerSymbol != 2)
    throw InvalidArgument("bitsPerSymbol must be 1 or 2");
  if (bits.size() % static_cast<std::size_t>(bitsPerSymbol) != 0)
    throw LengthError("bit count " + std::to_string(bits.size()) + " not divisible by " +
                      std::to_string(bitsPerSymbol));
  if (oversampling == 0 || !(sampleRate > 0.0)) throw InvalidArgument("invalid PSK frame parameters");

  const std::size_t numSymbols = bits.size() / static_cast<std::size_t>(bitsPerSymbol);
  const double amp = 1.0 / std::sqrt(static_cast<double>(oversampling));
  Waveform w;
  w.sampleRate = sampleRate;
  w.band = {-sampleRate / 2.0, sampleRate / 2.0};
  w.samples.reserve(numSymbols * oversampling);
  for (std::size_t s = 0; s < numSymbols; ++s) {
    const cplx sym = map_symbol(std::span(bits).subspan(s * bitsPerSymbol, bitsPerSymbol), bitsPerSymbol);
    for (std::size_t r = 0; r < oversampling; ++r) w.samples.push_back(amp * sym);
  }
  w.layout.kind = ModulationKind::SingleCarrierPsk;
  w.layout.bitsPerSymbol = bitsPerSymbol;
  w.layout.oversampling = oversampling;
  w.layout.numSymbols = numSymbols;
  w.layout.dataBits = bits;
  return w;
}

ModulationLayout make_ofdm_layout(std::size_t numSubcarriers, std::size_t numSymbols,
                                  int bitsPerSymbol, std::size_t pilotSpacing) {
  ModulationLayout l;
  l.kind = ModulationKind::Ofdm;
  l.bitsPerSymbol = bitsPerSymbol;
  l.numSubcarriers = numSubcarriers;
  l.numSymbols = numSymbols;
  l.activeSubcarriers.resize(numSubcarriers);
  for (std::size_t k = 0; k < numSubcarriers; ++k) l.activeSubcarriers[k] = k;
  l.pilotMask.assign(numSubcarriers * numSymbols, 0);
  if (pilotSpacing > 0)
    for (std::size_t m = 0; m < numSymbols; ++m)
      for (std::size_t k = 0; k < numSubcarriers; k += pilotSpacing) l.pilotMask[m * numSubcarriers + k] = 1;
  return l;
}

Waveform generate_ofdm(ModulationLayout layout, double sampleRate, std::size_t cpLength) {
  layout.kind = ModulationKind::Ofdm;
  layout.cpLength = cpLength;
  layout.validate();
  if (!(sampleRate > 0.0)) throw InvalidArgument("sample rate must be positive");

  const std::size_t K = layout.numSubcarriers;
  const std::size_t M = layout.numSymbols;
  const std::size_t bps = static_cast<std::size_t>(layout.bitsPerSymbol);
  std::size_t pilotCount = 0;
  for (auto p : layout.pilotMask) pilotCount += p != 0;
  const CVec pilots = pilot_sequence(pilotCount);

  Waveform w;
  w.sampleRate = sampleRate;
  w.samples.reserve(M * (K + cpLength));
  const double scale = std::sqrt(static_cast<double>(K));
  std::size_t nextPilot = 0, nextBit = 0;
  CVec X(K);
  for (std::size_t m = 0; m < M; ++m) {
    std::fill(X.begin(), X.end(), cplx{});
    for (std::size_t k : layout.activeSubcarriers) {
      if (layout.is_pilot(k, m)) {
        X[k] = pilots[nextPilot++];
      } else {
        X[k] = map_symbol(std::span(layout.dataBits).subspan(nextBit, bps), layout.bitsPerSymbol);
        nextBit += bps;
      }
    }
    fft::inverse(X);
    for (auto& v : X) v *= scale;
    w.samples.insert(w.samples.end(), X.end() - static_cast<std::ptrdiff_t>(cpLength), X.end());
    w.samples.insert(w.samples.end(), X.begin(), X.end());
  }

  const double df = sampleRate / static_cast<double>(K);
  double lo = sampleRate, hi = -sampleRate;
  for (std::size_t k : layout.activeSubcarriers) {
    const double f = fft::bin_frequency(k, K, sampleRate);
    lo = std::min(lo, f - df / 2.0);
    hi = std::max(hi, f + df / 2.0);
  }
  w.band = {std::max(lo, -sampleRate / 2.0), std::min(hi, sampleRate / 2.0)};
  w.layout = std::move(layout);
  return w;
}

Waveform generate_chirp(double bandwidth, double duration, double sampleRate) {
  if (!(sampleRate > 0.0) || !(duration > 0.0) || bandwidth < 0.0)
    throw InvalidArgument("invalid chirp parameters");
  if (bandwidth > sampleRate) throw InvalidArgument("chirp bandwidth exceeds the sample rate");
  const auto n = static_cast<std::size_t>(std::max(1.0, std::round(duration * sampleRate)));
  const double T = static_cast<double>(n) / sampleRate;
  Waveform w;
  w.sampleRate = sampleRate;
  w.band = {-bandwidth / 2.0, bandwidth / 2.0};
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sampleRate;
    const double phase = kPi * (bandwidth / T) * t * t - kPi * bandwidth * t;
    w.samples[i] = std::polar(1.0, phase);
  }
  w.layout.kind = ModulationKind::Chirp;
  w.layout.chirpBandwidth = bandwidth;
  return w;
}

// --- structure criteria ----------------------------------------------------

PaprResult papr(std::span<const cplx> u) {
  const double e = kernels::energy(u);
  if (u.empty() || !(e > 0.0)) throw ZeroSignalError("PAPR of an all-zero signal");
  const double mean = e / static_cast<double>(u.size());
  // Rounding in the two reductions can put a constant envelope a hair below 1.
  const double ratio = std::max(1.0, kernels::max_abs2(u) / mean);
  return {ratio, linear_to_db(ratio)};
}

double SpectrumProfile::frequency(std::size_t k) const {
  return fft::bin_frequency(k, psd.size(), sampleRate);
}

double SpectrumProfile::total_power() const {
  double s = 0.0;
  for (double p : psd) s += p;
  return s * binWidth;
}

SpectrumProfile spectrum_profile(const Waveform& u, std::size_t nfft) {
  const std::size_t n = u.size();
  if (nfft == 0) nfft = n;
  if (nfft < n) throw InvalidArgument("nfft shorter than the signal");
  CVec X(nfft);
  std::copy(u.samples.begin(), u.samples.end(), X.begin());
  fft::forward(X);
  SpectrumProfile p;
  p.sampleRate = u.sampleRate;
  p.binWidth = u.sampleRate / static_cast<double>(nfft);
  p.psd.resize(nfft);
  const double norm = 1.0 / (u.sampleRate * static_cast<double>(n));
  for (std::size_t k = 0; k < nfft; ++k) p.psd[k] = std::norm(X[k]) * norm;
  return p;
}

CVec ofdm_grid(std::span<const cplx> rx, const ModulationLayout& layout, std::size_t offset) {
  if (layout.kind != ModulationKind::Ofdm) throw LayoutError("not an OFDM layout");
  const std::size_t K = layout.numSubcarriers;
  const std::size_t M = layout.numSymbols;
  const double scale = 1.0 / std::sqrt(static_cast<double>(K));
  CVec grid(K * M);
  CVec buf(K);
  for (std::size_t m = 0; m < M; ++m) {
    const std::size_t start = offset + m * layout.symbol_length() + layout.cpLength;
    for (std::size_t k = 0; k < K; ++k) buf[k] = start + k < rx.size() ? rx[start + k] : cplx{};
    fft::forward(buf);
    for (std::size_t k = 0; k < K; ++k) grid[m * K + k] = buf[k] * scale;
  }
  return grid;
}

RVec subcarrier_power(const Waveform& u) {
  const auto& l = u.layout;
  const CVec grid = ofdm_grid(u.samples, l, 0);
  RVec p(l.numSubcarriers, 0.0);
  for (std::size_t m = 0; m < l.numSymbols; ++m)
    for (std::size_t k = 0; k < l.numSubcarriers; ++k) p[k] += std::norm(grid[m * l.numSubcarriers + k]);
  for (auto& v : p) v /= static_cast<double>(l.numSymbols);
  return p;
}

namespace {

// Energy per coarse frequency bin (FFT order, `bins` bins across fs).
RVec coarse_spectrum(const Waveform& u, std::size_t bins) {
  if (u.layout.kind == ModulationKind::Ofdm && bins == u.layout.numSubcarriers) return subcarrier_power(u);
  const std::size_t ratio = std::max<std::size_t>(1, (u.size() + bins - 1) / bins);
  const std::size_t nfft = ratio * bins;
  const SpectrumProfile p = spectrum_profile(u, nfft);
  RVec out(bins, 0.0);
  // Fine bin j belongs to the coarse bin whose centre is nearest, circularly.
  for (std::size_t j = 0; j < nfft; ++j) {
    const std::size_t b = ((j + ratio / 2) / ratio) % bins;
    out[b] += p.psd[j] * p.binWidth;
  }
  return out;
}

RVec slot_energy(const Waveform& u, std::size_t slots) {
  RVec out(slots, 0.0);
  const std::size_t n = u.size();
  for (std::size_t i = 0; i < n; ++i) out[std::min(slots - 1, i * slots / n)] += std::norm(u.samples[i]);
  return out;
}

std::vector<std::size_t> above(const RVec& energy, double thresholdDb) {
  const double peak = energy.empty() ? 0.0 : *std::max_element(energy.begin(), energy.end());
  std::vector<std::size_t> idx;
  if (!(peak > 0.0)) return idx;
  const double floor = peak * db_to_linear(thresholdDb);
  for (std::size_t i = 0; i < energy.size(); ++i)
    if (energy[i] > 0.0 && energy[i] >= floor) idx.push_back(i);
  return idx;
}

}  // namespace

InformativenessReport informativeness_check(const Waveform& u, const Dictionary& dict, double thresholdDb) {
  InformativenessReport r;
  r.thresholdDb = thresholdDb;
  using D = SupportBin::Domain;

  const std::size_t bins = dict.frequency_bins();
  for (std::size_t b : above(coarse_spectrum(u, bins), thresholdDb)) r.occupiedBins.push_back({D::Frequency, b});
  for (std::size_t b : dict.required_frequency_bins()) r.requiredBins.push_back({D::Frequency, b});

  if (const std::size_t slots = dict.time_slots(); slots > 0 && u.size() >= slots) {
    for (std::size_t s : above(slot_energy(u, slots), thresholdDb)) r.occupiedBins.push_back({D::Time, s});
    for (std::size_t s = 0; s < slots; ++s) r.requiredBins.push_back({D::Time, s});
  }

  for (const auto& req : r.requiredBins)
    if (std::find(r.occupiedBins.begin(), r.occupiedBins.end(), req) == r.occupiedBins.end())
      r.gapList.push_back(req);
  r.isInformative = r.gapList.empty();
  return r;
}

}  // namespace isac
