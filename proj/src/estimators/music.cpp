#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "internal.hpp"
#include "isac/fft.hpp"

namespace isac {
namespace {

std::ptrdiff_t signed_bin(std::size_t k, std::size_t K) {
  return k < (K + 1) / 2 ? static_cast<std::ptrdiff_t>(k) : static_cast<std::ptrdiff_t>(k) - static_cast<std::ptrdiff_t>(K);
}

}  // namespace

EstimateReport music_estimate(const ReceivedSignal& rx, std::size_t modelOrder, const Dictionary& grids,
                              const MusicOptions& options) {
  detail::check_receive(rx, grids);
  if (!grids.probe() || grids.probe()->layout.kind != ModulationKind::Ofdm)
    throw LayoutError("MUSIC needs an OFDM probe to form per-subcarrier snapshots");
  const Waveform& probe = *grids.probe();
  const ModulationLayout& layout = probe.layout;
  const std::size_t K = layout.numSubcarriers, M = layout.numSymbols;
  if (rx.samples.size() < M * layout.symbol_length()) throw LayoutError("received signal shorter than the frame");

  std::vector<std::size_t> order = layout.activeSubcarriers;
  std::sort(order.begin(), order.end(),
            [K](std::size_t a, std::size_t b) { return signed_bin(a, K) < signed_bin(b, K); });
  for (std::size_t i = 1; i < order.size(); ++i)
    if (signed_bin(order[i], K) != signed_bin(order[i - 1], K) + 1)
      throw LayoutError("MUSIC needs a contiguous block of active subcarriers");

  const std::size_t Kf = order.size();
  const std::size_t Lf = options.windowSubcarriers ? options.windowSubcarriers : std::max<std::size_t>(1, Kf / 2);
  const std::size_t Lt = options.windowSymbols ? options.windowSymbols : std::max<std::size_t>(1, M / 2);
  if (Lf > Kf || Lt > M) throw InvalidArgument("MUSIC smoothing window larger than the resource grid");
  const std::size_t d = Lf * Lt;
  if (modelOrder == 0 || modelOrder >= d)
    throw OrderError("model order " + std::to_string(modelOrder) + " must be in [1, " + std::to_string(d) + ")");

  EstimateReport rep;
  rep.estimator = "music";
  rep.capabilities = {{"resolution", "super-resolution"}, {"model_order", "required"}, {"grid", "on-grid scan"},
                      {"geometry", "mono-static"}, {"snapshots", "2-D smoothing"}};
  rep.cost.aprioriInputs.push_back("model order P");
  auto& flops = rep.cost.flopCount;

  const CVec X = ofdm_grid(probe.samples, layout);
  const CVec Y = ofdm_grid(rx.samples, layout);
  flops += 2 * M * fft::flop_cost(K);
  Eigen::MatrixXcd D(static_cast<Eigen::Index>(Kf), static_cast<Eigen::Index>(M));
  for (std::size_t m = 0; m < M; ++m)
    for (std::size_t i = 0; i < Kf; ++i) {
      const cplx x = X[m * K + order[i]];
      if (std::abs(x) == 0.0) throw LayoutError("active resource element carries no symbol");
      D(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(m)) = Y[m * K + order[i]] / x;
    }
  flops += Kf * M;

  const std::size_t S = (Kf - Lf + 1) * (M - Lt + 1);
  Eigen::MatrixXcd snaps(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(S));
  std::size_t s = 0;
  for (std::size_t b = 0; b + Lt <= M; ++b)
    for (std::size_t a = 0; a + Lf <= Kf; ++a, ++s)
      for (std::size_t lt = 0; lt < Lt; ++lt)
        for (std::size_t lf = 0; lf < Lf; ++lf)
          snaps(static_cast<Eigen::Index>(lt * Lf + lf), static_cast<Eigen::Index>(s)) =
              D(static_cast<Eigen::Index>(a + lf), static_cast<Eigen::Index>(b + lt));
  const Eigen::MatrixXcd R = snaps * snaps.adjoint() / static_cast<double>(S);
  flops += S * d * d;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(R);
  flops += d * d * d;
  const auto& ev = eig.eigenvalues();
  for (Eigen::Index i = ev.size() - 1; i >= 0; --i) rep.eigenvalues.push_back(ev(i));
  const Eigen::MatrixXcd Es = eig.eigenvectors().rightCols(static_cast<Eigen::Index>(modelOrder));

  const double fs = rx.sampleRate;
  const double df = fs / static_cast<double>(K);
  const double Ts = static_cast<double>(layout.symbol_length()) / fs;
  const std::size_t nd = grids.num_delays(), nv = grids.num_dopplers();
  rep.surface.resize(grids.size());
  Eigen::VectorXcd a(static_cast<Eigen::Index>(d));
  for (std::size_t iv = 0; iv < nv; ++iv) {
    const double nu = grids.doppler_grid()[iv];
    for (std::size_t id = 0; id < nd; ++id) {
      const double tau = grids.delay_grid()[id];
      for (std::size_t lt = 0; lt < Lt; ++lt)
        for (std::size_t lf = 0; lf < Lf; ++lf)
          a(static_cast<Eigen::Index>(lt * Lf + lf)) =
              std::polar(1.0, kPhysicalDelaySign * kTwoPi * static_cast<double>(lf) * df * tau +
                                  kTwoPi * nu * static_cast<double>(lt) * Ts);
      const double proj = (Es.adjoint() * a).squaredNorm() / static_cast<double>(d);
      rep.surface[grids.index(id, iv)] = 1.0 / std::max(1.0 - proj, 1e-300);
    }
  }
  flops += grids.size() * d * (modelOrder + 1);

  std::vector<std::size_t> peaks = detail::local_maxima(rep.surface, nd, nv);
  std::stable_sort(peaks.begin(), peaks.end(),
                   [&](std::size_t x, std::size_t y) { return rep.surface[x] > rep.surface[y]; });
  if (peaks.size() > modelOrder) peaks.resize(modelOrder);

  const detail::LsFit fit = detail::ls_refit(grids, peaks, rx.samples, &flops);
  for (std::size_t j = 0; j < peaks.size(); ++j) {
    const std::size_t c = peaks[j];
    rep.targets.push_back({fit.coefficients[j] / grids.atom_norm(c), grids.delay(c), grids.doppler(c), c,
                           rep.surface[c]});
  }
  rep.predictedSignal = fit.predicted;
  rep.cost.timeSamplesUsed = M * K;
  rep.cost.spectralBinsUsed = Kf;
  rep.cost.occupiedBandwidth = probe.band.width();
  detail::finalize(rep, rx);
  return rep;
}

}  // namespace isac
