#include <algorithm>
#include <cmath>

#include "internal.hpp"
#include "isac/fft.hpp"
#include "isac/kernels.hpp"

namespace isac {
namespace {

bool integer_delays(const Dictionary& dict, std::size_t rxLength) {
  for (double d : dict.delay_grid()) {
    const double s = d * dict.sample_rate();
    if (std::abs(s - std::round(s)) > 1e-9 || std::round(s) >= static_cast<double>(rxLength)) return false;
  }
  return true;
}

}  // namespace

EstimateReport matched_filter_estimate(const ReceivedSignal& rx, const Waveform& u, const Dictionary& dict,
                                       double thresholdDb) {
  detail::check_receive(rx, dict);
  if (std::abs(rx.sampleRate - u.sampleRate) > 1e-9 * u.sampleRate)
    throw InvalidArgument("received signal and waveform use different sample rates");
  if (dict.delay_grid().back() > rx.window.maxDelay * (1.0 + 1e-12) + 1e-15)
    throw GridError("dictionary delays extend beyond the unambiguous window");
  if (std::max(std::abs(dict.doppler_grid().front()), std::abs(dict.doppler_grid().back())) >
      rx.window.dopplerLimit)
    throw GridError("dictionary Dopplers extend beyond the unambiguous window");

  const std::size_t L = rx.samples.size();
  const std::size_t nd = dict.num_delays(), nv = dict.num_dopplers();
  const double fs = rx.sampleRate, dt = 1.0 / fs;
  EstimateReport rep;
  rep.estimator = "matched_filter";
  rep.capabilities = {{"resolution", "Fourier-limited"}, {"model_order", "not required"}, {"grid", "on-grid"},
                      {"geometry", "mono-static"}};
  auto& cost = rep.cost;

  // corr[c] = <u_c, rx> with u_c the unnormalized predicted vector of cell c.
  CVec corr(dict.size());
  if (integer_delays(dict, L)) {
    const std::size_t Lf = fft::good_size(L + u.size() - 1);
    CVec U(Lf);
    std::copy(u.samples.begin(), u.samples.end(), U.begin());
    fft::forward(U);
    cost.flopCount += fft::flop_cost(Lf);
    CVec Z(Lf), rot(L);
    for (std::size_t iv = 0; iv < nv; ++iv) {
      const double nu = dict.doppler_grid()[iv];
      for (std::size_t n = 0; n < L; ++n) rot[n] = std::polar(1.0, -kTwoPi * nu * static_cast<double>(n) * dt);
      std::fill(Z.begin(), Z.end(), cplx{});
      kernels::cmul(std::span(Z).first(L), rx.samples, rot);
      fft::forward(Z);
      kernels::cmul_conj(Z, Z, U);
      fft::inverse(Z);
      cost.flopCount += L + 2 * fft::flop_cost(Lf) + Lf;
      for (std::size_t id = 0; id < nd; ++id) {
        const auto shift = static_cast<std::size_t>(std::llround(dict.delay_grid()[id] * fs));
        corr[dict.index(id, iv)] = Z[shift];
      }
    }
  } else {
    for (std::size_t c = 0; c < dict.size(); ++c) corr[c] = kernels::cdot(dict.atom(c), rx.samples) * dict.atom_norm(c);
    cost.flopCount += dict.size() * L;
  }

  rep.surface.resize(dict.size());
  RVec stat(dict.size());
  double peak = 0.0;
  for (std::size_t c = 0; c < dict.size(); ++c) {
    rep.surface[c] = std::abs(corr[c]) * dt;
    stat[c] = std::abs(corr[c]) / dict.atom_norm(c);
    peak = std::max(peak, stat[c]);
  }

  rep.predictedSignal.assign(L, cplx{});
  if (peak > 0.0) {
    const double floor = peak * std::sqrt(db_to_linear(thresholdDb));
    for (std::size_t c : detail::local_maxima(stat, nd, nv)) {
      if (stat[c] < floor) continue;
      const double norm = dict.atom_norm(c);
      const cplx h = corr[c] / (norm * norm);
      rep.targets.push_back({h, dict.delay(c), dict.doppler(c), c, stat[c]});
      kernels::caxpy(rep.predictedSignal, h * norm, dict.atom(c));
    }
    std::stable_sort(rep.targets.begin(), rep.targets.end(),
                     [](const EstimatedTarget& a, const EstimatedTarget& b) { return a.score > b.score; });
  }

  cost.timeSamplesUsed = L;
  cost.spectralBinsUsed = dict.required_frequency_bins().size();
  cost.occupiedBandwidth = u.band.width();
  detail::finalize(rep, rx);
  return rep;
}

}  // namespace isac
