#include <algorithm>
#include <cmath>

#include "isac/estimators.hpp"
#include "isac/fft.hpp"

namespace isac {
namespace {

Bits demodulate_psk(const ReceivedSignal& rx, const Waveform& u, const EstimateReport& est) {
  const auto& l = u.layout;
  const std::size_t os = l.oversampling;
  const std::size_t N = l.numSymbols * os;
  if (rx.samples.size() < N) throw LayoutError("received signal shorter than the PSK frame");

  cplx h{1.0, 0.0};
  double tau = 0.0, nu = 0.0;
  if (!est.targets.empty()) {
    const auto strongest = std::max_element(est.targets.begin(), est.targets.end(), [](const auto& a, const auto& b) {
      return std::abs(a.amplitude) < std::abs(b.amplitude);
    });
    h = strongest->amplitude;
    tau = strongest->delay;
    nu = strongest->doppler;
  }
  CVec y(rx.samples.begin(), rx.samples.end());
  if (nu != 0.0)
    for (std::size_t n = 0; n < y.size(); ++n) y[n] *= std::polar(1.0, -kTwoPi * nu * static_cast<double>(n) / rx.sampleRate);
  if (tau != 0.0) y = delayed_copy(y, rx.sampleRate, -tau, 0.0, y.size());

  Bits out;
  out.reserve(l.numSymbols * static_cast<std::size_t>(l.bitsPerSymbol));
  const cplx derot = std::conj(h);
  for (std::size_t s = 0; s < l.numSymbols; ++s) {
    cplx acc{};
    for (std::size_t r = 0; r < os; ++r) acc += y[s * os + r];
    demap_hard(acc * derot, l.bitsPerSymbol, out);
  }
  return out;
}

Bits demodulate_ofdm(const ReceivedSignal& rx, const Waveform& u, const EstimateReport& est) {
  const auto& l = u.layout;
  l.validate();
  const std::size_t K = l.numSubcarriers, M = l.numSymbols;
  if (rx.samples.size() < M * l.symbol_length()) throw LayoutError("received signal shorter than the OFDM frame");
  const CVec Y = ofdm_grid(rx.samples, l);
  const double fs = rx.sampleRate;
  Bits out;
  out.reserve(l.dataBits.size());
  for (std::size_t m = 0; m < M; ++m) {
    // Doppler phase at the middle of the useful part of symbol m.
    const double tm = (static_cast<double>(m * l.symbol_length() + l.cpLength) + 0.5 * static_cast<double>(K - 1)) / fs;
    for (std::size_t k : l.activeSubcarriers) {
      if (l.is_pilot(k, m)) continue;
      cplx H{1.0, 0.0};
      if (!est.targets.empty()) {
        H = {};
        const double f = fft::bin_frequency(k, K, fs);
        for (const auto& t : est.targets)
          H += t.amplitude * std::polar(1.0, kPhysicalDelaySign * kTwoPi * f * t.delay + kTwoPi * t.doppler * tm);
      }
      const cplx x = std::abs(H) > 0.0 ? Y[m * K + k] / H : Y[m * K + k];
      demap_hard(x, l.bitsPerSymbol, out);
    }
  }
  return out;
}

}  // namespace

Bits demodulate(const ReceivedSignal& rx, const Waveform& u, const EstimateReport& channelEstimate) {
  switch (u.layout.kind) {
    case ModulationKind::SingleCarrierPsk: return demodulate_psk(rx, u, channelEstimate);
    case ModulationKind::Ofdm: return demodulate_ofdm(rx, u, channelEstimate);
    case ModulationKind::Chirp: break;
  }
  throw LayoutError("waveform carries no data layout");
}

}  // namespace isac
