#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "isac/metrics.hpp"

using namespace isac;

namespace {

double binary_entropy(double p) { return -p * std::log(p) - (1.0 - p) * std::log(1.0 - p); }

Eigen::MatrixXd bsc(double eps) {
  Eigen::MatrixXd w(2, 2);
  w << 1.0 - eps, eps, eps, 1.0 - eps;
  return w;
}

Eigen::MatrixXd random_channel(Rng& rng, int ny, int nx) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  Eigen::MatrixXd w(ny, nx);
  for (int x = 0; x < nx; ++x) {
    double s = 0.0;
    for (int y = 0; y < ny; ++y) s += (w(y, x) = U(rng));
    w.col(x) /= s;
  }
  return w;
}

RVec random_pmf(Rng& rng, int n) {
  std::uniform_real_distribution<double> U(0.01, 1.0);
  RVec p(n);
  double s = 0.0;
  for (auto& v : p) s += (v = U(rng));
  for (auto& v : p) v /= s;
  return p;
}

// Gaussian mean: x_i ~ N(theta, sigma^2), i = 1..n.
LikelihoodSampler gaussian_mean(double theta, double sigma, int n) {
  return [=](std::uint64_t seed) {
    Rng rng(seed);
    std::normal_distribution<double> N(theta, sigma);
    RVec x(n);
    for (auto& v : x) v = N(rng);
    return LogLikelihood([x, sigma](std::span<const double> th) {
      double s = 0.0;
      for (double v : x) s += (v - th[0]) * (v - th[0]);
      return -s / (2.0 * sigma * sigma);
    });
  };
}

// Single on-grid target, parameters (re h, im h, delay in samples).
LikelihoodSampler delay_model(const Waveform& u, cplx h, double delaySamples, double noiseVar, std::size_t outLen) {
  const double fs = u.sampleRate;
  const CVec clean = delayed_copy(u.samples, fs, delaySamples / fs, 0.0, outLen);
  return [=](std::uint64_t seed) {
    Rng rng(seed);
    CVec y(outLen);
    for (std::size_t i = 0; i < outLen; ++i) y[i] = h * clean[i] + complex_normal(rng, noiseVar);
    return LogLikelihood([y, u, fs, noiseVar, outLen](std::span<const double> th) {
      const CVec s = delayed_copy(u.samples, fs, th[2] / fs, 0.0, outLen);
      const cplx hh(th[0], th[1]);
      double r = 0.0;
      for (std::size_t i = 0; i < outLen; ++i) r += std::norm(y[i] - hh * s[i]);
      return -r / noiseVar;
    });
  };
}

Waveform unit_waveform(CVec samples, double fs) {
  Waveform u;
  u.samples = std::move(samples);
  u.sampleRate = fs;
  u.band = {-fs / 2.0, fs / 2.0};
  return u;
}

}  // namespace

TEST_SUITE("mse") {
  ParameterVector truth() { return ParameterVector{{1.0, -2.0, 3.0}, {"a", "b", "c"}}; }

  TEST_CASE("estimates equal to truth give zero") {
    std::vector<ParameterVector> est(5, truth());
    const auto r = mse_sample(truth(), est);
    CHECK(r.matrix.isZero(0.0));
    CHECK(r.trace == 0.0);
  }

  TEST_CASE("single estimate gives the outer product") {
    ParameterVector e = truth();
    e.values = {1.5, -2.0, 1.0};
    const auto r = mse_sample(truth(), std::vector{e});
    const Eigen::Vector3d d(-0.5, 0.0, 2.0);
    CHECK((r.matrix - d * d.transpose()).norm() < 1e-15);
    CHECK(r.trace == doctest::Approx(4.25));
  }

  TEST_CASE("Gaussian perturbations recover sigma^2 I") {
    const double sigma = 0.3;
    const std::size_t n = 100000;
    Rng rng(7);
    std::normal_distribution<double> N(0.0, sigma);
    std::vector<ParameterVector> est(n, truth());
    for (auto& e : est)
      for (auto& v : e.values) v += N(rng);
    const auto r = mse_sample(truth(), est);
    const double s2 = sigma * sigma;
    for (int i = 0; i < 3; ++i) {
      CHECK(std::abs(r.matrix(i, i) - s2) < 3.0 * s2 * std::sqrt(2.0 / n));
      for (int j = 0; j < 3; ++j)
        if (i != j) CHECK(std::abs(r.matrix(i, j)) < 3.0 * s2 / std::sqrt(double(n)));
    }
  }

  TEST_CASE("layout mismatch and empty input") {
    ParameterVector e = truth();
    e.layout[1] = "x";
    CHECK_THROWS_AS(mse_sample(truth(), std::vector{e}), LayoutMismatch);
    ParameterVector bad{{1.0}, {"a", "b"}};
    CHECK_THROWS_AS(mse_sample(bad, std::vector{bad}), LayoutMismatch);
    CHECK_THROWS_AS(mse_sample(truth(), std::span<const ParameterVector>{}), InvalidArgument);
  }

  TEST_CASE("parameter vector from targets") {
    const std::vector<Target> t = {{{1.0, 2.0}, 3e-6, 40.0}, {{-1.0, 0.5}, 1e-6, -10.0}};
    const auto p = ParameterVector::from_targets(t);
    CHECK(p.values == RVec{1.0, 2.0, 3e-6, 40.0, -1.0, 0.5, 1e-6, -10.0});
    CHECK(p.layout[6] == "tau1");
    CHECK_NOTHROW(p.check());
  }
}

TEST_SUITE("crlb") {
  TEST_CASE("Gaussian mean bound is sigma^2 / N") {
    const double sigma = 2.0;
    const int n = 10;
    CrlbOptions opt;
    opt.mcTrials = 10000;
    opt.seed = 3;
    const RVec theta{1.5};
    const auto c = crlb_numeric(gaussian_mean(1.5, sigma, n), theta, opt);
    CHECK(c(0, 0) == doctest::Approx(sigma * sigma / n).epsilon(0.05));
  }

  TEST_CASE("sample-mean MSE is not below the bound") {
    const double sigma = 1.0;
    const int n = 8;
    CrlbOptions opt;
    opt.mcTrials = 2000;
    const auto c = crlb_numeric(gaussian_mean(0.7, sigma, n), RVec{0.7}, opt);
    Rng rng(11);
    std::normal_distribution<double> N(0.7, sigma);
    const ParameterVector truth{{0.7}, {"theta"}};
    std::vector<ParameterVector> est;
    for (int t = 0; t < 20000; ++t) {
      double m = 0.0;
      for (int i = 0; i < n; ++i) m += N(rng);
      est.push_back({{m / n}, {"theta"}});
    }
    CHECK(mse_sample(truth, est).trace >= 0.9 * c.trace());
  }

  TEST_CASE("reparametrization scales the bound by c^2") {
    const double c = 7.5;
    const auto base = gaussian_mean(2.0, 1.0, 5);
    LikelihoodSampler scaled = [&](std::uint64_t seed) {
      auto ll = base(seed);
      return LogLikelihood([ll, c](std::span<const double> th) {
        const double t = th[0] / c;
        return ll(std::span<const double>(&t, 1));
      });
    };
    CrlbOptions opt;
    opt.mcTrials = 200;
    const auto a = crlb_numeric(base, RVec{2.0}, opt);
    const auto b = crlb_numeric(scaled, RVec{2.0 * c}, opt);
    CHECK(b(0, 0) == doctest::Approx(c * c * a(0, 0)).epsilon(1e-4));
  }

  TEST_CASE("doubling bandwidth shrinks the delay bound about fourfold") {
    const double fs = 1e6;
    const std::size_t n = 256;
    const double dur = double(n) / fs;
    CrlbOptions opt;
    opt.mcTrials = 20;
    opt.scales = {1.0, 1.0, 1.0};
    const RVec theta{1.0, 0.0, 5.0};
    const auto narrow = crlb_numeric(delay_model(generate_chirp(0.25 * fs, dur, fs), 1.0, 5.0, 1.0, n + 10), theta, opt);
    const auto wide = crlb_numeric(delay_model(generate_chirp(0.5 * fs, dur, fs), 1.0, 5.0, 1.0, n + 10), theta, opt);
    const double ratio = narrow(2, 2) / wide(2, 2);
    MESSAGE("delay CRLB ratio for 2x bandwidth: ", ratio);
    CHECK(ratio >= 3.5);
    CHECK(ratio <= 4.5);
  }

  TEST_CASE("bound is symmetric positive semidefinite") {
    const Waveform u = generate_chirp(4e5, 48e-6, 1e6);
    CrlbOptions opt;
    opt.mcTrials = 10;
    const auto c = crlb_numeric(delay_model(u, {0.6, -0.8}, 3.0, 0.5, 60), RVec{0.6, -0.8, 3.0}, opt);
    CHECK((c - c.transpose()).norm() <= 1e-12 * c.norm());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
    CHECK(es.eigenvalues().minCoeff() >= -1e-9);
  }

  TEST_CASE("unidentifiable parameters raise SingularFisher") {
    LikelihoodSampler s = [](std::uint64_t) {
      return LogLikelihood([](std::span<const double> th) { return -0.5 * (th[0] + th[1]) * (th[0] + th[1]); });
    };
    CrlbOptions opt;
    opt.mcTrials = 3;
    CHECK_THROWS_AS(crlb_numeric(s, RVec{1.0, 2.0}, opt), SingularFisher);
    LikelihoodSampler flat = [](std::uint64_t) { return LogLikelihood([](std::span<const double>) { return 0.0; }); };
    CHECK_THROWS_AS(crlb_numeric(flat, RVec{1.0}, opt), SingularFisher);
  }

  TEST_CASE("trials draw from derived seeds") {
    std::vector<std::uint64_t> seen;
    LikelihoodSampler s = [&](std::uint64_t seed) {
      seen.push_back(seed);
      return LogLikelihood([](std::span<const double> th) { return -th[0] * th[0]; });
    };
    CrlbOptions opt;
    opt.mcTrials = 3;
    opt.seed = 42;
    const auto f = fisher_numeric(s, RVec{0.0}, opt);
    CHECK(f(0, 0) == doctest::Approx(2.0).epsilon(1e-6));
    REQUIRE(seen.size() == 3);
    CHECK(seen[2] == derive_seed(42, 2, "crlb"));
  }
}

TEST_SUITE("communication") {
  // erfc by its Maclaurin series in long double, good to ~1e-18 for x <= 2.
  long double erfc_series(long double x) {
    long double term = x, sum = x;
    for (int k = 1; k < 80; ++k) {
      term *= -x * x / k;
      sum += term / (2 * k + 1);
    }
    return 1.0L - 2.0L / std::sqrt(std::numbers::pi_v<long double>) * sum;
  }

  TEST_CASE("BPSK closed form") {
    CHECK(ber_theoretical_bpsk(0.0) == 0.5);
    CHECK(std::abs(ber_theoretical_bpsk(1.0) - double(0.5L * erfc_series(1.0L))) < 1e-15);
    CHECK(std::abs(ber_theoretical_bpsk(1.0) - 0.0786496) < 1e-6);
    double prev = 0.5;
    for (double db = -10.0; db <= 20.0; db += 0.5) {
      const double p = ber_theoretical_bpsk(db_to_linear(db));
      CHECK(p < prev);
      prev = p;
    }
    CHECK(ber_theoretical_bpsk(1e4) < 1e-300);
    CHECK_THROWS_AS(ber_theoretical_bpsk(-1.0), InvalidArgument);
  }

  TEST_CASE("comm report counts bit and symbol errors") {
    const Bits a = {0, 1, 1, 0, 0, 0, 1, 1};
    const Bits b = {0, 1, 0, 1, 0, 0, 1, 0};
    const auto r = CommReport::from_bits(a, b, 2, 3.0);
    CHECK(r.bitErrors == 3);
    CHECK(r.symbolErrors == 2);
    CHECK(r.ber == 3.0 / 8.0);
    CHECK(r.ser == 0.5);
    CHECK(r.ebOverN0Db == 3.0);
    CHECK_THROWS_AS(CommReport::from_bits(a, Bits(7), 1), LengthError);
  }
}

TEST_SUITE("information") {
  TEST_CASE("product PMF has zero information") {
    Eigen::Vector3d px(0.2, 0.5, 0.3);
    Eigen::Vector2d py(0.4, 0.6);
    CHECK(std::abs(mutual_information(JointPMF(px * py.transpose()))) < 1e-15);
  }

  TEST_CASE("identity channel with uniform input gives ln 2") {
    CHECK(mutual_information(JointPMF(Eigen::Matrix2d::Identity() * 0.5)) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-15));
  }

  TEST_CASE("binary symmetric channel") {
    const double e = 0.1;
    const double expected = std::log(2.0) - (e * std::log(1.0 / e) + (1.0 - e) * std::log(1.0 / (1.0 - e)));
    // Direct 2x2 summation with marginals all 1/2.
    double direct = 0.0;
    for (double p : {0.5 * (1 - e), 0.5 * e, 0.5 * e, 0.5 * (1 - e)}) direct += p * std::log(p / 0.25);
    const double mi = mutual_information(JointPMF::from_channel(bsc(e), RVec{0.5, 0.5}));
    CHECK(std::abs(mi - direct) < 1e-9);
    CHECK(std::abs(mi - expected) < 1e-9);
    CHECK(mi == doctest::Approx(0.368).epsilon(1e-3));
  }

  TEST_CASE("information is non-negative and symmetric") {
    Rng rng(5);
    for (int t = 0; t < 100; ++t) {
      const Eigen::MatrixXd w = random_channel(rng, 2 + t % 4, 2 + t % 3);
      const JointPMF p = JointPMF::from_channel(w, random_pmf(rng, static_cast<int>(w.cols())));
      const double a = mutual_information(p);
      CHECK(a >= 0.0);
      CHECK(std::abs(a - mutual_information(p.transposed())) < 1e-12);
    }
  }

  TEST_CASE("invalid joint PMFs are rejected") {
    Eigen::Matrix2d m;
    m << 0.5, 0.5, 0.1, -0.1;
    CHECK_THROWS_AS(JointPMF{m}, InvalidArgument);
    CHECK_THROWS_AS(JointPMF{Eigen::Matrix2d::Constant(0.3)}, InvalidArgument);
  }

  TEST_CASE("capacity of simple channels") {
    const auto id = channel_capacity(Eigen::Matrix2d::Identity());
    CHECK(id.capacity == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    const auto noisy = channel_capacity(Eigen::MatrixXd::Constant(3, 2, 1.0 / 3.0));
    CHECK(std::abs(noisy.capacity) < 1e-12);
    const auto b = channel_capacity(bsc(0.1));
    CHECK(std::abs(b.capacity - (std::log(2.0) - binary_entropy(0.1))) <= 1e-9);
    CHECK(b.inputPmf[0] == doctest::Approx(0.5));
  }

  TEST_CASE("asymmetric channel: Z channel closed form") {
    // Z channel with crossover q: C = ln(1 + (1 - q) q^{q/(1-q)}).
    const double q = 0.3;
    Eigen::Matrix2d w;
    w << 1.0, q, 0.0, 1.0 - q;
    const auto r = channel_capacity(w);
    CHECK(std::abs(r.capacity - std::log(1.0 + (1.0 - q) * std::pow(q, q / (1.0 - q)))) < 1e-9);
    CHECK(r.gap < 1e-9);
  }

  TEST_CASE("capacity dominates information at any input") {
    Rng rng(9);
    for (int t = 0; t < 50; ++t) {
      const Eigen::MatrixXd w = random_channel(rng, 2 + t % 5, 2 + t % 4);
      const double c = channel_capacity(w).capacity;
      const double mi = mutual_information(JointPMF::from_channel(w, random_pmf(rng, static_cast<int>(w.cols()))));
      CHECK(c >= mi - 1e-9);
    }
  }

  TEST_CASE("non-stochastic channels are rejected") {
    Eigen::Matrix2d w;
    w << 0.5, 0.5, 0.6, 0.5;
    CHECK_THROWS_AS(channel_capacity(w), NonStochasticChannel);
    w << 1.2, 0.5, -0.2, 0.5;
    CHECK_THROWS_AS(channel_capacity(w), NonStochasticChannel);
  }

  TEST_CASE("conditional MI: flat spectra match the closed form") {
    const double U = 3e-7, S = 2.0, N0 = 1e-9, T = 1e-3, W = 2e5;
    const std::size_t q = 101;
    const RVec esd(q, U), var(q, S), pnn(q, N0);
    const double got = conditional_mi(esd, var, pnn, W / (q - 1), T);
    const double expected = T * W * std::log(1.0 + 2.0 * U * S / (N0 * T));
    CHECK(std::abs(got - expected) <= 1e-6 * expected);
  }

  TEST_CASE("conditional MI of a waveform") {
    const double fs = 1e5, a = 0.01, S = 1.5, N0 = 1e-8;
    CVec s(32, 0.0);
    s[0] = a;
    const Waveform delta = unit_waveform(s, fs);
    const SensingPrior prior{{S}};
    const double T = delta.duration();
    const double U = a * a / (fs * fs);
    const double expected = T * fs * std::log(1.0 + 2.0 * U * S / (N0 * T));
    const double got = conditional_mi(delta, prior, NoiseModel::white(N0, 0), T);
    CHECK(std::abs(got - expected) <= 1e-6 * expected);

    CHECK(conditional_mi(unit_waveform(CVec(32, 0.0), fs), prior, NoiseModel::white(N0, 0), T) == 0.0);
    CHECK(conditional_mi(delta, prior, NoiseModel::white(N0 * 1e12, 0), T) <= 1e-9);
    CHECK_THROWS_AS(conditional_mi(delta, prior, NoiseModel::none(), T), DivisionError);
    CHECK(conditional_mi(unit_waveform(CVec(32, 0.0), fs), prior, NoiseModel::none(), T) == 0.0);
  }

  TEST_CASE("unit conversions") {
    CHECK(nats_to_bits(std::log(2.0)) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(bits_to_nats(nats_to_bits(0.37)) == doctest::Approx(0.37).epsilon(1e-15));
  }
}

TEST_SUITE("ambiguity") {
  Waveform qpsk_like(std::size_t n, std::uint64_t seed, double fs) {
    Rng rng(seed);
    std::uniform_int_distribution<int> D(0, 3);
    CVec s(n);
    for (auto& v : s) v = std::polar(0.3, kPi / 4 + kPi / 2 * D(rng));
    return unit_waveform(s, fs);
  }

  TEST_CASE("peak equals energy") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const Waveform u = qpsk_like(50, seed, 2e4);
      const auto m = ambiguity(u, RVec{0.0}, RVec{0.0});
      CHECK(std::abs(m.values(0, 0) - u.energy()) <= 1e-9 * u.energy());
    }
    const Waveform c = generate_chirp(3e5, 64e-6, 1e6);
    CHECK(std::abs(ambiguity(c, RVec{0.0}, RVec{0.0}).values(0, 0) - c.energy()) <= 1e-9 * c.energy());
  }

  TEST_CASE("volume equals the squared energy") {
    const Waveform u = generate_chirp(2e5, 40e-6, 1e6);
    const auto [d, v] = full_ambiguity_grids(u);
    const auto m = ambiguity(u, d, v);
    const double e2 = u.energy() * u.energy();
    CHECK(std::abs(m.volume() - e2) <= 0.05 * e2);
    CHECK(std::abs(m.volume() - e2) <= 1e-9 * e2);
  }

  TEST_CASE("rectangular pulse zero-Doppler cut is triangular") {
    const std::size_t n = 20;
    const double fs = 1e3;
    const Waveform u = unit_waveform(CVec(n, cplx(0.5, 0.0)), fs);
    RVec delays;
    for (int k = -19; k <= 19; ++k) delays.push_back(k / fs);
    const auto m = ambiguity(u, delays, RVec{0.0});
    for (std::size_t c = 0; c < delays.size(); ++c) {
      const int k = static_cast<int>(c) - 19;
      // Brute-force double loop.
      cplx acc{};
      for (int a = 0; a < int(n); ++a)
        for (int b = 0; b < int(n); ++b)
          if (a - b == k) acc += u.samples[a] * std::conj(u.samples[b]);
      const double brute = std::abs(acc) / fs;
      CHECK(std::abs(m.values(0, c) - brute) < 1e-12);
      CHECK(std::abs(m.values(0, c) / u.energy() - (1.0 - std::abs(k) / double(n))) < 1e-6);
    }
  }

  TEST_CASE("global maximum sits at the origin") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const Waveform u = qpsk_like(32, seed, 1e4);
      const auto [d, v] = full_ambiguity_grids(u);
      const auto m = ambiguity(u, d, v);
      Eigen::Index r, c;
      m.values.maxCoeff(&r, &c);
      CHECK(std::abs(m.delayGrid[c]) <= 1.0 / u.sampleRate + 1e-15);
      CHECK(std::abs(m.dopplerGrid[r]) <= u.sampleRate / double(v.size()) + 1e-9);
      CHECK(m.values.minCoeff() >= 0.0);
      CHECK(m.at(0.0, 0.0) == doctest::Approx(u.energy()).epsilon(1e-12));
    }
  }

  TEST_CASE("global phase rotation leaves the map unchanged") {
    const Waveform u = qpsk_like(40, 4, 1e4);
    const auto [d, v] = full_ambiguity_grids(u);
    const auto m = ambiguity(u, d, v);
    Waveform neg = u;
    for (auto& s : neg.samples) s = -s;
    CHECK((ambiguity(neg, d, v).values.array() == m.values.array()).all());
    Waveform rot = u;
    for (auto& s : rot.samples) s *= std::polar(1.0, 0.731);
    CHECK((ambiguity(rot, d, v).values - m.values).cwiseAbs().maxCoeff() <= 1e-12 * u.energy());
  }

  TEST_CASE("grid violations") {
    const Waveform u = qpsk_like(16, 1, 1e3);
    CHECK_THROWS_AS(ambiguity(u, RVec{0.5e-3}, RVec{0.0}), GridError);
    CHECK_THROWS_AS(ambiguity(u, RVec{16e-3}, RVec{0.0}), GridError);
    CHECK_THROWS_AS(ambiguity(u, RVec{0.0}, RVec{600.0}), GridError);
    CHECK_THROWS_AS(ambiguity(u, RVec{}, RVec{0.0}), GridError);
    CHECK_NOTHROW(ambiguity(u, RVec{-15e-3}, RVec{-500.0}));
  }
}

TEST_SUITE("system identification") {
  const RVec y = {1.0, 3.0, 2.0, 5.0, 4.0};

  TEST_CASE("r squared") {
    CHECK(r_squared(y, y) == 1.0);
    CHECK(r_squared(y, RVec(5, 3.0)) == 0.0);
    CHECK(r_squared(y, RVec{5.0, -1.0, 6.0, 0.0, 9.0}) == 0.0);
    const RVec yh = {1.5, 2.5, 2.0, 4.5, 4.0};
    CHECK(r_squared(y, yh) == doctest::Approx(1.0 - 0.75 / 10.0));
    CHECK_THROWS_AS(r_squared(RVec(4, 2.0), RVec(4, 1.0)), DegenerateData);
    CHECK_THROWS_AS(r_squared(RVec{1.0}, RVec{1.0}), LengthError);
    CHECK_THROWS_AS(r_squared(y, RVec(4, 0.0)), LengthError);
  }

  TEST_CASE("final prediction error") {
    const RVec yh = {1.0, 2.0, 2.0, 5.0, 5.0};
    const double msr = 2.0 / 5.0;
    CHECK(fpe(y, yh, 0) == doctest::Approx(msr));
    const RVec y4 = {1.0, 2.0, 3.0, 4.0}, yh4 = {1.0, 2.5, 3.0, 3.0};
    CHECK(fpe(y4, yh4, 2) == doctest::Approx(3.0 * 1.25 / 4.0));
    double prev = -1.0;
    for (std::size_t d = 0; d < y.size(); ++d) {
      const double v = fpe(y, yh, d);
      CHECK(v > prev);
      prev = v;
    }
    CHECK_THROWS_AS(fpe(y, yh, 5), DimensionError);
  }

  TEST_CASE("generalized cost criterion") {
    const RVec yh = {1.0, 2.0, 2.0, 5.0, 5.0};
    CHECK(cost_criterion(y, yh, 0.0, Loss::Squared) == doctest::Approx(0.4));
    for (std::size_t d = 0; d < 5; ++d) {
      const double r = double(d) / 5.0;
      const double U = (1.0 + r) / (1.0 - r) - 1.0;
      CHECK(cost_criterion(y, yh, U, Loss::Squared) == doctest::Approx(fpe(y, yh, d)).epsilon(1e-14));
    }
    CHECK(cost_criterion(RVec{1.0, -1.0}, RVec{0.0, 0.0}, 0.7, Loss::Absolute) == doctest::Approx(1.7));
    CHECK_THROWS_AS(cost_criterion(y, yh, -0.1, Loss::Squared), InvalidArgument);
  }
}
