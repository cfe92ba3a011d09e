#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "isac/metrics.hpp"

namespace isac {

ParameterVector ParameterVector::from_targets(std::span<const Target> targets) {
  ParameterVector p;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const auto& t = targets[i];
    const std::string s = std::to_string(i);
    p.values.insert(p.values.end(), {t.amplitude.real(), t.amplitude.imag(), t.delay, t.doppler});
    p.layout.insert(p.layout.end(), {"re_h" + s, "im_h" + s, "tau" + s, "nu" + s});
  }
  return p;
}

void ParameterVector::check() const {
  if (values.size() != layout.size())
    throw LayoutMismatch("parameter vector has " + std::to_string(values.size()) + " values but " +
                         std::to_string(layout.size()) + " layout labels");
}

MseResult mse_sample(const ParameterVector& truth, std::span<const ParameterVector> estimates) {
  truth.check();
  if (estimates.empty()) throw InvalidArgument("mse_sample: no estimates");
  const auto d = static_cast<Eigen::Index>(truth.size());
  MseResult r;
  r.matrix = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd e(d);
  for (const auto& est : estimates) {
    est.check();
    if (est.layout != truth.layout) throw LayoutMismatch("mse_sample: estimate layout differs from truth");
    for (Eigen::Index i = 0; i < d; ++i) e[i] = truth.values[i] - est.values[i];
    r.matrix.noalias() += e * e.transpose();
  }
  r.matrix /= static_cast<double>(estimates.size());
  r.trace = r.matrix.trace();
  return r;
}

Eigen::MatrixXd fisher_numeric(const LikelihoodSampler& sampler, std::span<const double> theta0,
                               const CrlbOptions& options) {
  const std::size_t d = theta0.size();
  if (d == 0) throw InvalidArgument("fisher_numeric: empty parameter vector");
  if (options.mcTrials == 0) throw InvalidArgument("fisher_numeric: mcTrials must be positive");
  if (!(options.relStep > 0.0)) throw InvalidArgument("fisher_numeric: step must be positive");
  if (!options.scales.empty() && options.scales.size() != d)
    throw LengthError("fisher_numeric: scales length differs from parameter count");

  RVec h(d);
  for (std::size_t i = 0; i < d; ++i) {
    const double scale = options.scales.empty() ? 1.0 : options.scales[i];
    h[i] = options.relStep * std::max(std::abs(theta0[i]), scale);
  }

  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(d, d);
  RVec th(theta0.begin(), theta0.end());
  for (std::size_t t = 0; t < options.mcTrials; ++t) {
    const LogLikelihood ll = sampler(derive_seed(options.seed, t, "crlb"));
    auto eval = [&](std::size_t i, double si, std::size_t j, double sj) {
      std::copy(theta0.begin(), theta0.end(), th.begin());
      th[i] += si * h[i];
      th[j] += sj * h[j];
      return ll(th);
    };
    std::copy(theta0.begin(), theta0.end(), th.begin());
    const double f0 = ll(th);
    for (std::size_t i = 0; i < d; ++i) {
      const double fp = eval(i, 1.0, i, 0.0);
      const double fm = eval(i, -1.0, i, 0.0);
      acc(i, i) -= (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
      for (std::size_t j = i + 1; j < d; ++j) {
        const double fpp = eval(i, 1.0, j, 1.0);
        const double fpm = eval(i, 1.0, j, -1.0);
        const double fmp = eval(i, -1.0, j, 1.0);
        const double fmm = eval(i, -1.0, j, -1.0);
        const double hij = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j]);
        acc(i, j) -= hij;
        acc(j, i) -= hij;
      }
    }
  }
  acc /= static_cast<double>(options.mcTrials);
  return 0.5 * (acc + acc.transpose());
}

double scaled_condition(const Eigen::MatrixXd& fisher) {
  const Eigen::Index d = fisher.rows();
  Eigen::VectorXd s(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    if (!(fisher(i, i) > 0.0) || !std::isfinite(fisher(i, i))) return std::numeric_limits<double>::infinity();
    s[i] = 1.0 / std::sqrt(fisher(i, i));
  }
  const Eigen::MatrixXd scaled = s.asDiagonal() * fisher * s.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(scaled, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

Eigen::MatrixXd crlb_numeric(const LikelihoodSampler& sampler, std::span<const double> theta0,
                             const CrlbOptions& options) {
  const Eigen::MatrixXd fisher = fisher_numeric(sampler, theta0, options);
  const double cond = scaled_condition(fisher);
  if (!(cond <= 1e12)) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "Fisher information is singular (scaled condition %.3g)", cond);
    throw SingularFisher(buf);
  }
  const Eigen::Index d = fisher.rows();
  Eigen::VectorXd s(d);
  for (Eigen::Index i = 0; i < d; ++i) s[i] = 1.0 / std::sqrt(fisher(i, i));
  const Eigen::MatrixXd scaled = s.asDiagonal() * fisher * s.asDiagonal();
  Eigen::MatrixXd inv = s.asDiagonal() * scaled.inverse() * s.asDiagonal();
  return 0.5 * (inv + inv.transpose());
}

}  // namespace isac
