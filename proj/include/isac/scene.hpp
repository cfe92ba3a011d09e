#pragma once

// Delay-Doppler target scenes, clutter and noise, and the linear
// time-variant channel y(t) = sum_p h_p u(t - tau_p) e^{j2pi nu_p t} + n(t).
// Doppler acts at the channel output, after the delay.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "isac/common.hpp"
#include "isac/waveform.hpp"

namespace isac {

struct Target {
  cplx amplitude{1.0, 0.0};
  double delay = 0.0;    // s
  double doppler = 0.0;  // Hz
};

/// Delay/Doppler rectangle.
struct Region {
  double delayMin = 0.0;
  double delayMax = 0.0;
  double dopplerMin = 0.0;
  double dopplerMax = 0.0;
};

/// Homogeneous Poisson scatterer field with CN(0, amplitudeScale^2) gains.
/// `density` counts scatterers per resolution cell of size
/// cellDelay x cellDoppler.
struct ClutterModel {
  double density = 0.0;
  double amplitudeScale = 0.0;
  Region region;
  double cellDelay = 1.0;
  double cellDoppler = 1.0;

  double expected_count() const;
  void validate() const;
};

class TargetScene {
 public:
  TargetScene() = default;
  /// Throws InvalidArgument on non-finite parameters, negative delays or two
  /// targets sharing the same (delay, Doppler) pair.
  explicit TargetScene(std::vector<Target> targets, std::optional<ClutterModel> clutter = {},
                       std::string label = {});

  const std::vector<Target>& targets() const { return targets_; }
  const std::optional<ClutterModel>& clutter() const { return clutter_; }
  const std::string& label() const { return label_; }
  std::size_t size() const { return targets_.size(); }

 private:
  std::vector<Target> targets_;
  std::optional<ClutterModel> clutter_;
  std::string label_;
};

/// Noise PSD in W/Hz sampled uniformly across [-fs/2, fs/2] of the signal it
/// is applied to (a single sample means white noise). Empty or all-zero PSD
/// disables noise.
struct NoiseModel {
  RVec psd;
  std::uint64_t seed = 0;

  static NoiseModel none() { return {}; }
  static NoiseModel white(double psdWattsPerHz, std::uint64_t seed) { return {{psdWattsPerHz}, seed}; }

  bool enabled() const;
  void validate() const;
  /// Linear interpolation of the sampled PSD at frequency f in [-fs/2, fs/2].
  double psd_at(double f, double fs) const;
};

/// Spectral variance sigma_g^2(f) of the random impulse response, sampled
/// uniformly across the waveform band.
struct SensingPrior {
  RVec spectralVariance;
  void validate() const;
  double at(double f, const Band& band) const;
};

/// Unambiguous window of a scenario. Targets must satisfy 0 <= tau <=
/// maxDelay and |nu| <= dopplerLimit (half the effective PRF / symbol rate).
struct ChannelWindow {
  double maxDelay = 0.0;
  double dopplerLimit = 0.0;

  /// maxDelay = frame duration, dopplerLimit = fs / 2.
  static ChannelWindow for_waveform(const Waveform& u) { return {u.duration(), u.sampleRate / 2.0}; }
  std::size_t max_delay_samples(double fs) const;
};

struct ReceivedSignal {
  CVec samples;
  double sampleRate = 1.0;
  std::size_t txLength = 0;
  ChannelWindow window;
};

/// g(t, f) = sum_p h_p e^{j2pi t nu_p} e^{j2pi f tau_p}, verbatim signs.
cplx eval_dd_response(const TargetScene& scene, double t, double f);

/// Copy of u delayed by `delay` and modulated by e^{j2pi doppler t}, of length
/// outLength. Integer-sample delays shift exactly; fractional delays apply a
/// frequency-domain phase ramp on a zero-padded grid (band-limited
/// interpolation). `flops`, when given, accumulates the FFT cost.
CVec delayed_copy(std::span<const cplx> u, double fs, double delay, double doppler,
                  std::size_t outLength, std::uint64_t* flops = nullptr);

/// Colored complex Gaussian noise of the given length: white CN(0,1) samples
/// shaped by sqrt(psd * fs) in the frequency domain. Per-sample variance for
/// white PSD N0 is N0 * fs.
CVec synthesize_noise(const NoiseModel& noise, std::size_t length, double fs);

/// Output length = u.size() + ceil(window.maxDelay * fs). If the scene has a
/// clutter model, a clutter realization seeded from noise.seed is added.
/// Throws AliasError / DelayError when a scatterer leaves the window.
ReceivedSignal apply_channel(const Waveform& u, const TargetScene& scene, const NoiseModel& noise,
                             const ChannelWindow& window);

TargetScene generate_clutter(const ClutterModel& model, std::uint64_t seed);

// --- scene files -----------------------------------------------------------

/// Sectioned text:
///
///   schema_version = 1
///   [scene]
///   label = two targets
///   target = <re h> <im h> <delay s> <doppler Hz>     (repeatable)
///   [clutter]                                         (optional)
///   density = 0.5
///   amplitude_scale = 0.1
///   delay_range = <min s> <max s>
///   doppler_range = <min Hz> <max Hz>
///   cell = <delay s> <doppler Hz>
///
/// Unknown sections/keys and malformed rows are rejected with line numbers.
TargetScene parse_scene(std::string_view text, const std::string& origin = "<scene>");
TargetScene load_scene(const std::filesystem::path& path);
std::string format_scene(const TargetScene& scene);

}  // namespace isac
