#include <algorithm>
#include <cmath>

#include "internal.hpp"
#include "isac/kernels.hpp"

namespace isac {

EstimateReport omp_estimate(const ReceivedSignal& rx, const Dictionary& dict, std::size_t sparsity) {
  detail::check_receive(rx, dict);
  if (sparsity > dict.size())
    throw InvalidArgument("sparsity " + std::to_string(sparsity) + " exceeds the dictionary size " +
                          std::to_string(dict.size()));
  const std::size_t L = rx.samples.size();
  EstimateReport rep;
  rep.estimator = "omp";
  rep.capabilities = {{"resolution", "coherence-limited"}, {"model_order", "required"}, {"grid", "on-grid"},
                      {"geometry", "mono-static"}};
  rep.cost.aprioriInputs.push_back("target count P");

  CVec residual = rx.samples;
  rep.residualHistory.push_back(kernels::energy(residual));
  std::vector<std::size_t> support;
  std::vector<std::uint8_t> used(dict.size(), 0);
  detail::LsFit fit;
  fit.predicted.assign(L, cplx{});
  RVec score(dict.size());
  for (std::size_t it = 0; it < sparsity; ++it) {
    std::size_t best = dict.size();
    double bestScore = 0.0;
    for (std::size_t c = 0; c < dict.size(); ++c) {
      score[c] = std::abs(kernels::cdot(dict.atom(c), residual));
      if (!used[c] && score[c] > bestScore) best = c, bestScore = score[c];
    }
    rep.cost.flopCount += dict.size() * L;
    if (best == dict.size()) break;  // residual orthogonal to every unused atom
    support.push_back(best);
    used[best] = 1;
    fit = detail::ls_refit(dict, support, rx.samples, &rep.cost.flopCount);
    for (std::size_t i = 0; i < L; ++i) residual[i] = rx.samples[i] - fit.predicted[i];
    rep.residualHistory.push_back(kernels::energy(residual));
  }
  rep.surface = score;

  for (std::size_t j = 0; j < support.size(); ++j) {
    const std::size_t c = support[j];
    rep.targets.push_back({fit.coefficients[j] / dict.atom_norm(c), dict.delay(c), dict.doppler(c), c,
                           std::abs(fit.coefficients[j])});
  }
  rep.predictedSignal = fit.predicted;
  rep.cost.timeSamplesUsed = L;
  rep.cost.spectralBinsUsed = dict.required_frequency_bins().size();
  rep.cost.occupiedBandwidth = dict.band().width();
  detail::finalize(rep, rx);
  return rep;
}

}  // namespace isac
