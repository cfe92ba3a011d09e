#include <algorithm>
#include <numeric>

#include "doctest.h"
#include "isac/fft.hpp"
#include "isac/scene.hpp"
#include "isac/textdoc.hpp"
#include "isac/waveform.hpp"

using namespace isac;

namespace {

CVec random_vec(Rng& rng, std::size_t n) {
  CVec v(n);
  for (auto& x : v) x = complex_normal(rng, 1.0);
  return v;
}

Waveform random_waveform(Rng& rng, std::size_t n, double fs) {
  Waveform w;
  w.samples = random_vec(rng, n);
  w.sampleRate = fs;
  w.band = {-fs / 2, fs / 2};
  return w;
}

double energy(const CVec& v) {
  double e = 0.0;
  for (auto x : v) e += std::norm(x);
  return e;
}

double rel_diff(const CVec& a, const CVec& b) {
  double num = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) num += std::norm(a[i] - b[i]);
  return std::sqrt(num / std::max(energy(b), 1e-300));
}

// Smooth pulse whose spectrum is negligible near Nyquist, so its fractional
// shifts are known in closed form.
CVec gaussian_pulse(std::size_t n, double shift) {
  CVec v(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = (static_cast<double>(i) - 100.0 - shift) / 12.0;
    v[i] = std::exp(-x * x) * std::exp(cplx(0.0, 0.3 * (static_cast<double>(i) - shift)));
  }
  return v;
}

}  // namespace

TEST_CASE("eval_dd_response") {
  SUBCASE("empty scene is zero") {
    const TargetScene s;
    CHECK(eval_dd_response(s, 0.3, 17.0) == cplx{});
  }
  SUBCASE("unit target at the origin is one everywhere") {
    const TargetScene s({Target{}});
    for (double t : {0.0, 1e-3, 2.5})
      for (double f : {-1e6, 0.0, 3e3}) CHECK(std::abs(eval_dd_response(s, t, f) - 1.0) < 1e-15);
  }
  SUBCASE("term-by-term oracle") {
    Rng rng(11);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const TargetScene s({{complex_normal(rng, 1.0), 2e-6 * U(rng), 500.0 * (U(rng) - 0.5)},
                         {complex_normal(rng, 1.0), 2e-6 * U(rng), 500.0 * (U(rng) - 0.5)}});
    for (int i = 0; i < 20; ++i) {
      const double t = 1e-3 * U(rng), f = 2e6 * (U(rng) - 0.5);
      cplx expect{};
      for (const auto& p : s.targets()) {
        const double ph = 2.0 * kPi * (t * p.doppler + f * p.delay);
        expect += p.amplitude * cplx(std::cos(ph), std::sin(ph));
      }
      const cplx got = eval_dd_response(s, t, f);
      CHECK(std::abs(got - expect) <= 1e-12 * std::abs(expect));
    }
  }
}

TEST_CASE("sampled response is a 2-D Fourier structure") {
  const std::size_t K = 16, M = 8;
  const double df = 1e3, T = 1e-3;
  const TargetScene s({{{1.0, 0.5}, 3.0 / (K * df), 2.0 / (M * T)}, {{0.3, 0.0}, 9.0 / (K * df), -3.0 / (M * T)}});
  CVec grid(K * M);
  for (std::size_t m = 0; m < M; ++m)
    for (std::size_t k = 0; k < K; ++k) grid[m * K + k] = eval_dd_response(s, m * T, k * df);
  // Transform over f then over t; positive exponents land on bins (tau, nu).
  CVec row(K), col(M);
  for (std::size_t m = 0; m < M; ++m) {
    std::copy_n(grid.begin() + m * K, K, row.begin());
    fft::forward(row);
    std::copy(row.begin(), row.end(), grid.begin() + m * K);
  }
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t m = 0; m < M; ++m) col[m] = grid[m * K + k];
    fft::forward(col);
    for (std::size_t m = 0; m < M; ++m) grid[m * K + k] = col[m];
  }
  const double scale = static_cast<double>(K * M);
  CHECK(std::abs(grid[2 * K + 3] / scale - cplx(1.0, 0.5)) < 1e-12);
  CHECK(std::abs(grid[(M - 3) * K + 9] / scale - cplx(0.3, 0.0)) < 1e-12);
  double rest = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (i != 2 * K + 3 && i != (M - 3) * K + 9) rest += std::norm(grid[i]);
  CHECK(rest < 1e-24 * energy(grid));
}

TEST_CASE("apply_channel examples") {
  Rng rng(5);
  const double fs = 1e6;
  const Waveform u = random_waveform(rng, 64, fs);
  const ChannelWindow win{20.0 / fs, fs / 4};

  SUBCASE("empty scene without noise") {
    const auto rx = apply_channel(u, TargetScene{}, NoiseModel::none(), win);
    CHECK(rx.samples.size() == 84);
    CHECK(std::all_of(rx.samples.begin(), rx.samples.end(), [](cplx v) { return v == cplx{}; }));
  }
  SUBCASE("identity channel") {
    const auto rx = apply_channel(u, TargetScene({Target{}}), NoiseModel::none(), win);
    for (std::size_t i = 0; i < u.size(); ++i) CHECK(rx.samples[i] == u.samples[i]);
    for (std::size_t i = u.size(); i < rx.samples.size(); ++i) CHECK(rx.samples[i] == cplx{});
  }
  SUBCASE("seven-sample delay against convolution with a shifted delta") {
    const auto rx = apply_channel(u, TargetScene({{{1.0, 0.0}, 7.0 / fs, 0.0}}), NoiseModel::none(), win);
    CVec h(8, cplx{});
    h[7] = 1.0;
    CVec conv(rx.samples.size(), cplx{});
    for (std::size_t n = 0; n < conv.size(); ++n)
      for (std::size_t k = 0; k < h.size(); ++k)
        if (n >= k && n - k < u.size()) conv[n] += h[k] * u.samples[n - k];
    CHECK(rel_diff(rx.samples, conv) < 1e-15);
  }
  SUBCASE("window violations") {
    CHECK_THROWS_AS(apply_channel(u, TargetScene({{{1.0, 0.0}, 21.0 / fs, 0.0}}), NoiseModel::none(), win),
                    DelayError);
    CHECK_THROWS_AS(apply_channel(u, TargetScene({{{1.0, 0.0}, 0.0, fs / 3}}), NoiseModel::none(), win),
                    AliasError);
  }
}

TEST_CASE("channel properties") {
  Rng rng(21);
  const double fs = 1e6;
  const ChannelWindow win{16.0 / fs, fs / 2};
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Target> ts;
    for (int p = 0; p < 3; ++p) ts.push_back({complex_normal(rng, 1.0), 16.0 / fs * U(rng), fs * (U(rng) - 0.5) / 2});
    const TargetScene scene(ts);
    const Waveform u1 = random_waveform(rng, 48, fs), u2 = random_waveform(rng, 48, fs);
    const cplx a = complex_normal(rng, 1.0), b = complex_normal(rng, 1.0);

    Waveform mix = u1;
    for (std::size_t i = 0; i < mix.size(); ++i) mix.samples[i] = a * u1.samples[i] + b * u2.samples[i];
    const auto y = apply_channel(mix, scene, NoiseModel::none(), win).samples;
    const auto y1 = apply_channel(u1, scene, NoiseModel::none(), win).samples;
    const auto y2 = apply_channel(u2, scene, NoiseModel::none(), win).samples;
    CVec lin(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) lin[i] = a * y1[i] + b * y2[i];
    CHECK(rel_diff(y, lin) < 1e-10);

    CVec sum(y1.size(), cplx{});
    for (const auto& t : ts) {
      const auto yp = apply_channel(u1, TargetScene({t}), NoiseModel::none(), win).samples;
      for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += yp[i];
    }
    CHECK(rel_diff(y1, sum) < 1e-10);

    const double nu = fs * (U(rng) - 0.5);
    const auto ye = apply_channel(u1, TargetScene({{{1.0, 0.0}, 0.0, nu}}), NoiseModel::none(), win).samples;
    CHECK(std::abs(energy(ye) - energy(u1.samples)) <= 1e-10 * energy(u1.samples));
  }
}

TEST_CASE("fractional delay is band-limited interpolation") {
  const std::size_t n = 256;
  const CVec u = gaussian_pulse(n, 0.0);
  for (double d : {0.37, 0.5, 3.25, 10.9}) {
    const CVec got = delayed_copy(u, 1.0, d, 0.0, n);
    CHECK(rel_diff(got, gaussian_pulse(n, d)) < 1e-10);
  }
  const CVec half = delayed_copy(u, 1.0, 0.5, 0.0, n);
  CHECK(rel_diff(delayed_copy(half, 1.0, 0.5, 0.0, n), delayed_copy(u, 1.0, 1.0, 0.0, n)) < 1e-10);
}

TEST_CASE("noise synthesis") {
  const double fs = 2e6, n0 = 1e-9;
  const auto w = synthesize_noise(NoiseModel::white(n0, 99), 200000, fs);
  const double var = energy(w) / static_cast<double>(w.size());
  CHECK(var == doctest::Approx(n0 * fs).epsilon(0.01));
  CHECK(synthesize_noise(NoiseModel::white(n0, 99), 16, fs) == synthesize_noise(NoiseModel::white(n0, 99), 16, fs));

  // Colored: PSD zero on the negative half, 2*n0 on the positive half.
  const NoiseModel colored{{0.0, 0.0, 0.0, 0.0, 2 * n0, 2 * n0, 2 * n0, 2 * n0, 2 * n0}, 5};
  CVec c = synthesize_noise(colored, 4096, fs);
  fft::forward(c);
  double lowBand = 0.0, highBand = 0.0;
  for (std::size_t k = 0; k < c.size(); ++k) {
    const double f = fft::bin_frequency(k, c.size(), fs);
    if (f < -fs / 8) lowBand += std::norm(c[k]);
    if (f > fs / 8) highBand += std::norm(c[k]);
  }
  CHECK(lowBand < 1e-20 * highBand);
  CHECK_THROWS_AS(synthesize_noise(NoiseModel{{-1.0}, 0}, 4, fs), InvalidArgument);
}

TEST_CASE("generate_clutter") {
  ClutterModel m;
  m.region = {0.0, 10.0, -5.0, 5.0};
  m.cellDelay = 1.0;
  m.cellDoppler = 1.0;
  m.amplitudeScale = 0.1;
  SUBCASE("zero density") { CHECK(generate_clutter(m, 3).size() == 0); }
  SUBCASE("deterministic and inside the region") {
    m.density = 0.2;
    const auto a = generate_clutter(m, 42), b = generate_clutter(m, 42);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a.targets()[i].amplitude == b.targets()[i].amplitude);
      CHECK(a.targets()[i].delay == b.targets()[i].delay);
      CHECK(a.targets()[i].delay >= 0.0);
      CHECK(a.targets()[i].delay <= 10.0);
      CHECK(std::abs(a.targets()[i].doppler) <= 5.0);
    }
  }
  SUBCASE("Poisson count statistics") {
    m.density = 0.5;  // 100 cells -> mean 50
    CHECK(m.expected_count() == doctest::Approx(50.0));
    double sum = 0.0;
    const int seeds = 1000;
    for (int s = 0; s < seeds; ++s) sum += static_cast<double>(generate_clutter(m, derive_seed(7, s, "clutter")).size());
    const double mean = sum / seeds;
    CHECK(std::abs(mean - 50.0) < 3.0 * std::sqrt(50.0 / seeds));
  }
  SUBCASE("invalid models") {
    m.density = -1.0;
    CHECK_THROWS_AS(generate_clutter(m, 1), InvalidArgument);
  }
}

TEST_CASE("clutter enters the channel") {
  const double fs = 1e6;
  Rng rng(2);
  const Waveform u = random_waveform(rng, 32, fs);
  ClutterModel m;
  m.density = 1.0;
  m.amplitudeScale = 1.0;
  m.region = {0.0, 8.0 / fs, -1e3, 1e3};
  m.cellDelay = 1.0 / fs;
  m.cellDoppler = 1e3;
  const TargetScene scene({}, m);
  const ChannelWindow win{8.0 / fs, fs / 2};
  const auto a = apply_channel(u, scene, NoiseModel{{}, 9}, win);
  const auto b = apply_channel(u, scene, NoiseModel{{}, 9}, win);
  CHECK(a.samples == b.samples);
  CHECK(energy(a.samples) > 0.0);
  m.region.delayMax = 20.0 / fs;
  CHECK_THROWS_AS(apply_channel(u, TargetScene({}, m), NoiseModel{{}, 9}, win), DelayError);
}

TEST_CASE("scene validation") {
  CHECK_THROWS_AS(TargetScene({{{1.0, 0.0}, 1e-6, 5.0}, {{2.0, 0.0}, 1e-6, 5.0}}), InvalidArgument);
  CHECK_THROWS_AS(TargetScene({{{1.0, 0.0}, -1e-6, 5.0}}), InvalidArgument);
  CHECK_THROWS_AS(TargetScene({{{NAN, 0.0}, 0.0, 0.0}}), InvalidArgument);
}

TEST_CASE("scene files") {
  const TargetScene s({{{1.0, -0.25}, 1.5e-6, 120.0}, {{0.1, 0.0}, 0.0, -3.0}},
                      ClutterModel{0.5, 0.2, {0.0, 1e-5, -100.0, 100.0}, 1e-6, 10.0}, "pair");
  const TargetScene r = parse_scene(format_scene(s));
  REQUIRE(r.size() == 2);
  CHECK(r.label() == "pair");
  CHECK(r.targets()[0].amplitude == s.targets()[0].amplitude);
  CHECK(r.targets()[0].delay == s.targets()[0].delay);
  CHECK(r.targets()[1].doppler == s.targets()[1].doppler);
  REQUIRE(r.clutter());
  CHECK(r.clutter()->region.delayMax == 1e-5);
  CHECK(r.clutter()->cellDoppler == 10.0);

  const char* bad =
      "schema_version = 1\n"
      "[scene]\n"
      "target = 1 0 1e-6\n"
      "target = 1 0 -1 0\n"
      "colour = red\n";
  try {
    parse_scene(bad);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(e.issues().size() == 3);
  }
}
