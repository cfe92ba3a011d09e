#include "isac/scene.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>

#include "isac/fft.hpp"
#include "isac/kernels.hpp"

namespace isac {

double ClutterModel::expected_count() const {
  const double area = (region.delayMax - region.delayMin) * (region.dopplerMax - region.dopplerMin);
  return density * area / (cellDelay * cellDoppler);
}

void ClutterModel::validate() const {
  const double vals[] = {density, amplitudeScale, region.delayMin, region.delayMax,
                         region.dopplerMin, region.dopplerMax, cellDelay, cellDoppler};
  for (double v : vals)
    if (!std::isfinite(v)) throw InvalidArgument("clutter model has non-finite parameters");
  if (density < 0.0) throw InvalidArgument("clutter density must be >= 0");
  if (amplitudeScale < 0.0) throw InvalidArgument("clutter amplitude scale must be >= 0");
  if (region.delayMin < 0.0 || region.delayMax < region.delayMin || region.dopplerMax < region.dopplerMin)
    throw InvalidArgument("clutter region must be an ordered rectangle with delay >= 0");
  if (!(cellDelay > 0.0) || !(cellDoppler > 0.0)) throw InvalidArgument("clutter cell size must be positive");
}

TargetScene::TargetScene(std::vector<Target> targets, std::optional<ClutterModel> clutter, std::string label)
    : targets_(std::move(targets)), clutter_(std::move(clutter)), label_(std::move(label)) {
  std::set<std::pair<double, double>> cells;
  for (const auto& t : targets_) {
    if (!std::isfinite(t.delay) || !std::isfinite(t.doppler) || !std::isfinite(t.amplitude.real()) ||
        !std::isfinite(t.amplitude.imag()))
      throw InvalidArgument("target parameters must be finite");
    if (t.delay < 0.0) throw InvalidArgument("target delay must be >= 0");
    if (!cells.emplace(t.delay, t.doppler).second)
      throw InvalidArgument("two targets share the same (delay, Doppler) cell");
  }
  if (clutter_) clutter_->validate();
}

bool NoiseModel::enabled() const {
  return std::any_of(psd.begin(), psd.end(), [](double p) { return p > 0.0; });
}

void NoiseModel::validate() const {
  for (double p : psd)
    if (!std::isfinite(p) || p < 0.0) throw InvalidArgument("noise PSD samples must be finite and >= 0");
}

double NoiseModel::psd_at(double f, double fs) const {
  if (psd.empty()) return 0.0;
  if (psd.size() == 1) return psd.front();
  const double pos = (f + fs / 2.0) / fs * static_cast<double>(psd.size() - 1);
  if (pos <= 0.0) return psd.front();
  if (pos >= static_cast<double>(psd.size() - 1)) return psd.back();
  const auto i = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(i);
  return psd[i] * (1.0 - frac) + psd[i + 1] * frac;
}

void SensingPrior::validate() const {
  for (double v : spectralVariance)
    if (!std::isfinite(v) || v < 0.0) throw InvalidArgument("spectral variance samples must be finite and >= 0");
}

double SensingPrior::at(double f, const Band& band) const {
  const auto& s = spectralVariance;
  if (s.empty()) return 0.0;
  if (s.size() == 1 || band.width() <= 0.0) return s.front();
  const double pos = (f - band.lo) / band.width() * static_cast<double>(s.size() - 1);
  if (pos <= 0.0) return s.front();
  if (pos >= static_cast<double>(s.size() - 1)) return s.back();
  const auto i = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(i);
  return s[i] * (1.0 - frac) + s[i + 1] * frac;
}

std::size_t ChannelWindow::max_delay_samples(double fs) const {
  return static_cast<std::size_t>(std::ceil(maxDelay * fs - 1e-9));
}

cplx eval_dd_response(const TargetScene& scene, double t, double f) {
  cplx acc{};
  for (const auto& p : scene.targets()) {
    acc += p.amplitude * std::polar(1.0, kTwoPi * t * p.doppler) *
           std::polar(1.0, kResponseDelaySign * kTwoPi * f * p.delay);
  }
  return acc;
}

CVec delayed_copy(std::span<const cplx> u, double fs, double delay, double doppler, std::size_t outLength,
                  std::uint64_t* flops) {
  CVec out(outLength);
  const double d = delay * fs;
  const double nearest = std::round(d);
  if (std::abs(d - nearest) < 1e-9) {
    const auto shift = static_cast<std::ptrdiff_t>(nearest);
    for (std::size_t i = 0; i < u.size(); ++i) {
      const auto n = static_cast<std::ptrdiff_t>(i) + shift;
      if (n >= 0 && n < static_cast<std::ptrdiff_t>(outLength)) out[static_cast<std::size_t>(n)] = u[i];
    }
  } else {
    // Zero-padded so the interpolation tails have room before wrapping.
    const std::size_t span = std::max(outLength, u.size() + static_cast<std::size_t>(std::ceil(std::abs(d))));
    const std::size_t L = fft::good_size(span + 64);
    CVec buf(L);
    std::copy(u.begin(), u.end(), buf.begin());
    fft::forward(buf);
    for (std::size_t k = 0; k < L; ++k)
      buf[k] *= std::polar(1.0, kPhysicalDelaySign * kTwoPi * fft::bin_frequency(k, L, fs) * delay);
    fft::inverse(buf);
    std::copy_n(buf.begin(), outLength, out.begin());
    if (flops) *flops += 2 * fft::flop_cost(L) + L;
  }
  if (doppler != 0.0) {
    CVec rot(outLength);
    for (std::size_t n = 0; n < outLength; ++n)
      rot[n] = std::polar(1.0, kTwoPi * doppler * static_cast<double>(n) / fs);
    kernels::cmul(out, out, rot);
    if (flops) *flops += outLength;
  }
  return out;
}

CVec synthesize_noise(const NoiseModel& noise, std::size_t length, double fs) {
  noise.validate();
  CVec n(length);
  if (!noise.enabled() || length == 0) return n;
  Rng rng(noise.seed);
  for (auto& v : n) v = complex_normal(rng, 1.0);
  if (noise.psd.size() == 1) {
    const double g = std::sqrt(noise.psd.front() * fs);
    for (auto& v : n) v *= g;
    return n;
  }
  fft::forward(n);
  for (std::size_t k = 0; k < length; ++k) n[k] *= std::sqrt(noise.psd_at(fft::bin_frequency(k, length, fs), fs) * fs);
  fft::inverse(n);
  return n;
}

namespace {

void check_in_window(const Target& t, const ChannelWindow& w) {
  if (t.delay > w.maxDelay * (1.0 + 1e-12))
    throw DelayError("delay " + std::to_string(t.delay) + " s exceeds the unambiguous window " +
                     std::to_string(w.maxDelay) + " s");
  if (std::abs(t.doppler) > w.dopplerLimit)
    throw AliasError("Doppler " + std::to_string(t.doppler) + " Hz exceeds the limit " +
                     std::to_string(w.dopplerLimit) + " Hz");
}

}  // namespace

ReceivedSignal apply_channel(const Waveform& u, const TargetScene& scene, const NoiseModel& noise,
                             const ChannelWindow& window) {
  if (!(window.maxDelay >= 0.0) || !(window.dopplerLimit > 0.0))
    throw InvalidArgument("channel window needs maxDelay >= 0 and dopplerLimit > 0");
  if (window.dopplerLimit > u.sampleRate / 2.0 * (1.0 + 1e-12))
    throw AliasError("Doppler limit exceeds half the sample rate");
  noise.validate();

  ReceivedSignal rx;
  rx.sampleRate = u.sampleRate;
  rx.txLength = u.size();
  rx.window = window;
  const std::size_t L = u.size() + window.max_delay_samples(u.sampleRate);
  rx.samples.assign(L, cplx{});

  auto add_targets = [&](const std::vector<Target>& targets) {
    for (const auto& t : targets) check_in_window(t, window);
    for (const auto& t : targets) {
      const CVec c = delayed_copy(u.samples, u.sampleRate, t.delay, t.doppler, L);
      kernels::caxpy(rx.samples, t.amplitude, c);
    }
  };
  add_targets(scene.targets());
  if (scene.clutter()) add_targets(generate_clutter(*scene.clutter(), derive_seed(noise.seed, 0, "clutter")).targets());

  if (noise.enabled()) {
    const CVec n = synthesize_noise(noise, L, u.sampleRate);
    kernels::caxpy(rx.samples, cplx{1.0, 0.0}, n);
  }
  return rx;
}

TargetScene generate_clutter(const ClutterModel& model, std::uint64_t seed) {
  model.validate();
  const double mean = model.expected_count();
  if (!(mean > 0.0)) return TargetScene({}, {}, "clutter");
  Rng rng(seed);
  std::poisson_distribution<long long> count(mean);
  const long long n = count(rng);
  const auto& r = model.region;
  std::uniform_real_distribution<double> delay(r.delayMin, r.delayMax);
  std::uniform_real_distribution<double> dopp(r.dopplerMin, r.dopplerMax);
  std::vector<Target> targets;
  targets.reserve(static_cast<std::size_t>(n));
  const double var = model.amplitudeScale * model.amplitudeScale;
  for (long long i = 0; i < n; ++i) {
    Target t;
    t.delay = delay(rng);
    t.doppler = dopp(rng);
    t.amplitude = complex_normal(rng, var);
    targets.push_back(t);
  }
  return TargetScene(std::move(targets), {}, "clutter");
}

}  // namespace isac
