#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "internal.hpp"
#include "isac/kernels.hpp"

namespace isac {

std::array<double, 4> CostLedger::cost_vector() const {
  return {static_cast<double>(flopCount), static_cast<double>(timeSamplesUsed),
          static_cast<double>(spectralBinsUsed), static_cast<double>(aprioriInputs.size())};
}

std::string_view to_string(CostForm form) { return form == CostForm::FpeLike ? "fpe" : "additive"; }

double tally_cost(std::span<const double> costs, std::span<const double> weights, double cmax, CostForm form) {
  if (costs.size() != weights.size())
    throw LengthError("cost vector has " + std::to_string(costs.size()) + " entries, weights " +
                      std::to_string(weights.size()));
  if (!(cmax > 0.0) || !std::isfinite(cmax)) throw InvalidArgument("C_max must be positive and finite");
  double wsum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw WeightError("cost weights must be finite and >= 0");
    wsum += w;
  }
  if (std::abs(wsum - 1.0) > 1e-9) throw WeightError("cost weights sum to " + std::to_string(wsum) + ", not 1");
  double s = 0.0;
  for (std::size_t k = 0; k < costs.size(); ++k) {
    if (!(costs[k] >= 0.0) || !std::isfinite(costs[k])) throw InvalidArgument("cost entries must be finite and >= 0");
    s += weights[k] * costs[k];
  }
  s /= cmax;
  if (form == CostForm::Additive) return 1.0 + s;
  if (s >= 1.0) throw SaturationError("weighted cost reaches C_max (S = " + std::to_string(s) + ")");
  return (1.0 + s) / (1.0 - s);
}

double tally_cost(const EstimateReport& report, std::span<const double> weights, double cmax, CostForm form) {
  const auto c = report.cost.cost_vector();
  return tally_cost(c, weights, cmax, form);
}

double residual_energy(std::span<const cplx> a, std::span<const cplx> b) {
  double e = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) e += std::norm(a[i] - b[i]);
  return e;
}

namespace detail {

std::vector<std::size_t> local_maxima(const RVec& surface, std::size_t nd, std::size_t nv) {
  std::vector<std::size_t> out;
  for (std::size_t iv = 0; iv < nv; ++iv) {
    for (std::size_t id = 0; id < nd; ++id) {
      const std::size_t c = iv * nd + id;
      const double v = surface[c];
      bool peak = true;
      for (int dv = -1; dv <= 1 && peak; ++dv) {
        for (int dd = -1; dd <= 1; ++dd) {
          if (dv == 0 && dd == 0) continue;
          const auto jv = static_cast<std::ptrdiff_t>(iv) + dv;
          const auto jd = static_cast<std::ptrdiff_t>(id) + dd;
          if (jv < 0 || jd < 0 || jv >= static_cast<std::ptrdiff_t>(nv) || jd >= static_cast<std::ptrdiff_t>(nd))
            continue;
          const std::size_t n = static_cast<std::size_t>(jv) * nd + static_cast<std::size_t>(jd);
          if (surface[n] > v || (n < c && surface[n] == v)) {
            peak = false;
            break;
          }
        }
      }
      if (peak) out.push_back(c);
    }
  }
  return out;
}

LsFit ls_refit(const Dictionary& dict, const std::vector<std::size_t>& cells, std::span<const cplx> rx,
               std::uint64_t* flops) {
  const auto L = static_cast<Eigen::Index>(dict.rx_length());
  const auto s = static_cast<Eigen::Index>(cells.size());
  LsFit fit;
  fit.predicted.assign(dict.rx_length(), cplx{});
  if (s == 0) return fit;
  Eigen::MatrixXcd A(L, s);
  for (Eigen::Index j = 0; j < s; ++j) {
    const auto a = dict.atom(cells[static_cast<std::size_t>(j)]);
    for (Eigen::Index i = 0; i < L; ++i) A(i, j) = a[static_cast<std::size_t>(i)];
  }
  const Eigen::Map<const Eigen::VectorXcd> y(rx.data(), L);
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  fit.condition = sv(s - 1) > 0.0 ? sv(0) / sv(s - 1) : INFINITY;
  if (!(fit.condition <= 1e12))
    throw RankError("selected atoms are numerically dependent (condition number " + std::to_string(fit.condition) +
                    ")");
  const Eigen::VectorXcd x = svd.solve(y);
  const Eigen::VectorXcd p = A * x;
  fit.coefficients.assign(x.data(), x.data() + s);
  fit.predicted.assign(p.data(), p.data() + L);
  if (flops) *flops += static_cast<std::uint64_t>(L * s * s + s * s * s + 2 * L * s);
  return fit;
}

void check_receive(const ReceivedSignal& rx, const Dictionary& dict) {
  if (rx.samples.size() != dict.rx_length())
    throw InvalidArgument("received length " + std::to_string(rx.samples.size()) + " does not match dictionary " +
                          std::to_string(dict.rx_length()));
  if (std::abs(rx.sampleRate - dict.sample_rate()) > 1e-9 * dict.sample_rate())
    throw InvalidArgument("received signal and dictionary use different sample rates");
}

void finalize(EstimateReport& report, const ReceivedSignal& rx) {
  if (report.predictedSignal.size() != rx.samples.size()) report.predictedSignal.resize(rx.samples.size());
  report.residualEnergy = residual_energy(rx.samples, report.predictedSignal);
}

}  // namespace detail
}  // namespace isac
