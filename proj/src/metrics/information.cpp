#include <algorithm>
#include <cmath>
#include <string>

#include "isac/metrics.hpp"

namespace isac {

double q_function(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double ber_theoretical_bpsk(double ebOverN0) {
  if (!(ebOverN0 >= 0.0)) throw InvalidArgument("Eb/N0 must be non-negative");
  return q_function(std::sqrt(2.0 * ebOverN0));
}

CommReport CommReport::from_bits(const Bits& sent, const Bits& received, int bitsPerSymbol, double ebOverN0Db) {
  if (sent.size() != received.size())
    throw LengthError("bit vectors differ in length: " + std::to_string(sent.size()) + " vs " +
                      std::to_string(received.size()));
  if (bitsPerSymbol < 1) throw InvalidArgument("bitsPerSymbol must be positive");
  const auto bps = static_cast<std::size_t>(bitsPerSymbol);
  if (sent.size() % bps != 0) throw LengthError("bit count is not a whole number of symbols");
  CommReport r;
  r.ebOverN0Db = ebOverN0Db;
  r.bitsTransmitted = sent.size();
  r.symbolsTransmitted = sent.size() / bps;
  for (std::size_t s = 0; s < r.symbolsTransmitted; ++s) {
    bool wrong = false;
    for (std::size_t b = 0; b < bps; ++b) {
      if ((sent[s * bps + b] != 0) != (received[s * bps + b] != 0)) {
        ++r.bitErrors;
        wrong = true;
      }
    }
    if (wrong) ++r.symbolErrors;
  }
  if (r.bitsTransmitted > 0) {
    r.ber = static_cast<double>(r.bitErrors) / static_cast<double>(r.bitsTransmitted);
    r.ser = static_cast<double>(r.symbolErrors) / static_cast<double>(r.symbolsTransmitted);
  }
  return r;
}

JointPMF::JointPMF(Eigen::MatrixXd p, std::vector<std::string> xLabels, std::vector<std::string> yLabels)
    : p_(std::move(p)), xLabels_(std::move(xLabels)), yLabels_(std::move(yLabels)) {
  if (p_.size() == 0) throw InvalidArgument("joint PMF is empty");
  for (Eigen::Index i = 0; i < p_.size(); ++i)
    if (!(p_.data()[i] >= 0.0) || !std::isfinite(p_.data()[i]))
      throw InvalidArgument("joint PMF has a negative or non-finite entry");
  const double total = p_.sum();
  if (std::abs(total - 1.0) > 1e-12) throw InvalidArgument("joint PMF sums to " + std::to_string(total));
  if (!xLabels_.empty() && xLabels_.size() != static_cast<std::size_t>(p_.rows()))
    throw LengthError("x alphabet size differs from PMF rows");
  if (!yLabels_.empty() && yLabels_.size() != static_cast<std::size_t>(p_.cols()))
    throw LengthError("y alphabet size differs from PMF columns");
}

JointPMF JointPMF::from_channel(const Eigen::MatrixXd& channel, std::span<const double> inputPmf) {
  if (static_cast<std::size_t>(channel.cols()) != inputPmf.size())
    throw LengthError("input PMF size differs from channel input alphabet");
  Eigen::MatrixXd p(channel.cols(), channel.rows());
  for (Eigen::Index x = 0; x < channel.cols(); ++x)
    for (Eigen::Index y = 0; y < channel.rows(); ++y) p(x, y) = inputPmf[x] * channel(y, x);
  // Renormalize away rounding so the 1e-12 check holds for valid inputs.
  const double total = p.sum();
  if (total > 0.0 && std::abs(total - 1.0) < 1e-9) p /= total;
  return JointPMF(std::move(p));
}

JointPMF JointPMF::transposed() const { return JointPMF(p_.transpose(), yLabels_, xLabels_); }

double mutual_information(const JointPMF& pmf) {
  const auto& p = pmf.matrix();
  const Eigen::VectorXd px = pmf.marginal_x();
  const Eigen::VectorXd py = pmf.marginal_y();
  double mi = 0.0;
  for (Eigen::Index x = 0; x < p.rows(); ++x)
    for (Eigen::Index y = 0; y < p.cols(); ++y)
      if (p(x, y) > 0.0) mi += p(x, y) * std::log(p(x, y) / (px[x] * py[y]));
  return std::max(mi, 0.0);
}

CapacityResult channel_capacity(const Eigen::MatrixXd& W, double tol, int maxIterations) {
  if (W.size() == 0) throw NonStochasticChannel("channel matrix is empty");
  for (Eigen::Index x = 0; x < W.cols(); ++x) {
    double col = 0.0;
    for (Eigen::Index y = 0; y < W.rows(); ++y) {
      if (!(W(y, x) >= 0.0) || !std::isfinite(W(y, x)))
        throw NonStochasticChannel("channel has a negative or non-finite entry");
      col += W(y, x);
    }
    if (std::abs(col - 1.0) > 1e-9)
      throw NonStochasticChannel("channel column " + std::to_string(x) + " sums to " + std::to_string(col));
  }
  if (!(tol > 0.0)) throw InvalidArgument("capacity tolerance must be positive");

  const Eigen::Index nx = W.cols(), ny = W.rows();
  Eigen::VectorXd p = Eigen::VectorXd::Constant(nx, 1.0 / static_cast<double>(nx));
  Eigen::VectorXd D(nx);
  CapacityResult r;
  for (int it = 1; it <= maxIterations; ++it) {
    const Eigen::VectorXd q = W * p;
    for (Eigen::Index x = 0; x < nx; ++x) {
      double d = 0.0;
      for (Eigen::Index y = 0; y < ny; ++y)
        if (W(y, x) > 0.0) d += W(y, x) * std::log(W(y, x) / q[y]);
      D[x] = d;
    }
    const double shift = D.maxCoeff();
    double z = 0.0;
    for (Eigen::Index x = 0; x < nx; ++x) z += p[x] * std::exp(D[x] - shift);
    const double lower = shift + std::log(z);
    r.capacity = std::max(lower, 0.0);
    r.gap = shift - lower;
    r.iterations = it;
    if (r.gap < tol) break;
    for (Eigen::Index x = 0; x < nx; ++x) p[x] *= std::exp(D[x] - shift) / z;
  }
  r.inputPmf.assign(p.data(), p.data() + nx);
  return r;
}

double conditional_mi(std::span<const double> esd, std::span<const double> var, std::span<const double> pnn,
                      double df, double T) {
  if (esd.size() != var.size() || esd.size() != pnn.size())
    throw LengthError("conditional_mi: spectra have different lengths");
  if (!(T > 0.0)) throw InvalidArgument("conditional_mi: T must be positive");
  if (esd.size() < 2) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < esd.size(); ++i) {
    const double num = 2.0 * esd[i] * var[i];
    double g = 0.0;
    if (num > 0.0) {
      if (!(pnn[i] > 0.0)) throw DivisionError("noise PSD is zero where the signal has energy");
      g = std::log1p(num / (pnn[i] * T));
    }
    const double w = (i == 0 || i + 1 == esd.size()) ? 0.5 : 1.0;
    sum += w * g;
  }
  return T * df * sum;
}

double conditional_mi(const Waveform& u, const SensingPrior& prior, const NoiseModel& noise, double T) {
  prior.validate();
  noise.validate();
  const Band& band = u.band;
  if (!(band.width() > 0.0)) return 0.0;
  const std::size_t q = std::max<std::size_t>(u.size(), 64) + 1;
  const double df = band.width() / static_cast<double>(q - 1);
  const double dt = 1.0 / u.sampleRate;
  RVec esd(q), var(q), pnn(q);
  for (std::size_t i = 0; i < q; ++i) {
    const double f = band.lo + static_cast<double>(i) * df;
    cplx acc = 0.0;
    const double w = -kTwoPi * f * dt;
    for (std::size_t n = 0; n < u.size(); ++n) acc += u.samples[n] * std::polar(1.0, w * static_cast<double>(n));
    esd[i] = std::norm(acc * dt);
    var[i] = prior.at(f, band);
    pnn[i] = noise.psd_at(f, u.sampleRate);
  }
  return conditional_mi(esd, var, pnn, df, T);
}

double nats_to_bits(double nats) { return nats / std::numbers::ln2; }
double bits_to_nats(double bits) { return bits * std::numbers::ln2; }

}  // namespace isac
