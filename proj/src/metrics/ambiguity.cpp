#include <algorithm>
#include <cmath>
#include <cstdio>

#include "isac/fft.hpp"
#include "isac/metrics.hpp"

namespace isac {

namespace {

RVec cell_widths(const RVec& g, double fallback) {
  RVec w(g.size(), fallback);
  if (g.size() < 2) return w;
  const std::size_t n = g.size();
  w[0] = g[1] - g[0];
  w[n - 1] = g[n - 1] - g[n - 2];
  for (std::size_t i = 1; i + 1 < n; ++i) w[i] = 0.5 * (g[i + 1] - g[i - 1]);
  return w;
}

std::size_t nearest(const RVec& g, double x) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < g.size(); ++i)
    if (std::abs(g[i] - x) < std::abs(g[best] - x)) best = i;
  return best;
}

}  // namespace

double AmbiguityMap::volume() const {
  const RVec wd = cell_widths(delayGrid, 0.0);
  const RVec wv = cell_widths(dopplerGrid, 0.0);
  double v = 0.0;
  for (Eigen::Index r = 0; r < values.rows(); ++r)
    for (Eigen::Index c = 0; c < values.cols(); ++c) v += values(r, c) * values(r, c) * wv[r] * wd[c];
  return v;
}

double AmbiguityMap::at(double delay, double doppler) const {
  if (delayGrid.empty() || dopplerGrid.empty()) throw GridError("ambiguity map is empty");
  return values(static_cast<Eigen::Index>(nearest(dopplerGrid, doppler)),
                static_cast<Eigen::Index>(nearest(delayGrid, delay)));
}

AmbiguityMap ambiguity(const Waveform& u, const RVec& delayGrid, const RVec& dopplerGrid) {
  const std::size_t n = u.size();
  if (n == 0) throw GridError("ambiguity of an empty waveform");
  if (delayGrid.empty() || dopplerGrid.empty()) throw GridError("ambiguity grids must be non-empty");
  const double fs = u.sampleRate;
  const double dt = 1.0 / fs;

  std::vector<long> lags(delayGrid.size());
  for (std::size_t i = 0; i < delayGrid.size(); ++i) {
    const double s = delayGrid[i] * fs;
    const double r = std::round(s);
    if (!std::isfinite(s) || std::abs(s - r) > 1e-6) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "delay %.6g s is not on the sample grid", delayGrid[i]);
      throw GridError(buf);
    }
    if (std::abs(r) >= static_cast<double>(n)) throw GridError("delay outside the waveform duration");
    lags[i] = static_cast<long>(r);
  }
  for (double nu : dopplerGrid)
    if (!std::isfinite(nu) || std::abs(nu) > fs / 2.0 * (1.0 + 1e-12))
      throw GridError("Doppler outside [-fs/2, fs/2]");

  const std::size_t L = fft::good_size(2 * n - 1);
  CVec U(L, cplx{});
  std::copy(u.samples.begin(), u.samples.end(), U.begin());
  fft::forward(U);

  AmbiguityMap map;
  map.delayGrid = delayGrid;
  map.dopplerGrid = dopplerGrid;
  map.values.resize(static_cast<Eigen::Index>(dopplerGrid.size()), static_cast<Eigen::Index>(delayGrid.size()));
  CVec Z(L);
  for (std::size_t r = 0; r < dopplerGrid.size(); ++r) {
    std::fill(Z.begin(), Z.end(), cplx{});
    const double w = kTwoPi * dopplerGrid[r] * dt;
    for (std::size_t k = 0; k < n; ++k) Z[k] = u.samples[k] * std::polar(1.0, w * static_cast<double>(k));
    fft::forward(Z);
    for (std::size_t k = 0; k < L; ++k) Z[k] *= std::conj(U[k]);
    fft::inverse(Z);
    for (std::size_t c = 0; c < lags.size(); ++c) {
      const long d = lags[c];
      const std::size_t idx = d >= 0 ? static_cast<std::size_t>(d) : L - static_cast<std::size_t>(-d);
      map.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = std::abs(Z[idx]) * dt;
    }
  }
  return map;
}

std::pair<RVec, RVec> full_ambiguity_grids(const Waveform& u) {
  const std::size_t n = u.size();
  if (n == 0) throw GridError("ambiguity of an empty waveform");
  const double fs = u.sampleRate;
  RVec delays;
  for (long d = -static_cast<long>(n) + 1; d < static_cast<long>(n); ++d) delays.push_back(static_cast<double>(d) / fs);
  const std::size_t L = 2 * n;
  RVec dopplers(L);
  for (std::size_t i = 0; i < L; ++i) dopplers[i] = -fs / 2.0 + static_cast<double>(i) * fs / static_cast<double>(L);
  return {delays, dopplers};
}

}  // namespace isac
