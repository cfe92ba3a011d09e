#pragma once

// Shared vocabulary for the toolkit: sample types, the error hierarchy,
// phase conventions and seed splitting.

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace isac {

using cplx = std::complex<double>;
using CVec = std::vector<cplx>;
using RVec = std::vector<double>;
using Bits = std::vector<std::uint8_t>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Sign of the delay exponent in the delay-Doppler response
/// g(t,f) = sum h e^{+j2pi t nu} e^{+j2pi f tau}. eval_dd_response uses it
/// verbatim. The physical channel (a delay u(t - tau)) carries the opposite
/// sign in the frequency domain; kernels that build delayed copies use
/// kPhysicalDelaySign.
inline constexpr double kResponseDelaySign = +1.0;
inline constexpr double kPhysicalDelaySign = -1.0;

// ---------------------------------------------------------------------------
// Errors. Every failure mode named by a module contract has its own type so
// callers (and the CLI exit-code mapping) can tell them apart.
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define ISAC_DEFINE_ERROR(Name)            \
  class Name : public Error {              \
   public:                                 \
    using Error::Error;                    \
  }

ISAC_DEFINE_ERROR(InvalidArgument);
ISAC_DEFINE_ERROR(AliasError);
ISAC_DEFINE_ERROR(DelayError);
ISAC_DEFINE_ERROR(LengthError);
ISAC_DEFINE_ERROR(LayoutError);
ISAC_DEFINE_ERROR(ZeroSignalError);
ISAC_DEFINE_ERROR(GridError);
ISAC_DEFINE_ERROR(RankError);
ISAC_DEFINE_ERROR(OrderError);
ISAC_DEFINE_ERROR(WeightError);
ISAC_DEFINE_ERROR(SaturationError);
ISAC_DEFINE_ERROR(LayoutMismatch);
ISAC_DEFINE_ERROR(SingularFisher);
ISAC_DEFINE_ERROR(NonStochasticChannel);
ISAC_DEFINE_ERROR(DivisionError);
ISAC_DEFINE_ERROR(DegenerateData);
ISAC_DEFINE_ERROR(DimensionError);
ISAC_DEFINE_ERROR(NormalizationError);
ISAC_DEFINE_ERROR(TopologyError);
ISAC_DEFINE_ERROR(DegeneracyError);
ISAC_DEFINE_ERROR(EmptyBelief);
ISAC_DEFINE_ERROR(IdMismatch);
ISAC_DEFINE_ERROR(IoError);

#undef ISAC_DEFINE_ERROR

// ---------------------------------------------------------------------------
// Seeds
// ---------------------------------------------------------------------------

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// FNV-1a over a component name, used to give every consumer of a master
/// seed its own stream.
constexpr std::uint64_t hash_name(std::string_view name) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// Derived seed = mix64(mix64(master ^ mix64(index)) ^ hash(component)).
/// Depends only on its arguments, never on execution order.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index,
                                    std::string_view component) noexcept {
  return mix64(mix64(master ^ mix64(index)) ^ hash_name(component));
}

using Rng = std::mt19937_64;

/// Circular-symmetric complex Gaussian with E|z|^2 = variance.
inline cplx complex_normal(Rng& rng, double variance) {
  std::normal_distribution<double> n(0.0, std::sqrt(variance / 2.0));
  const double re = n(rng);
  const double im = n(rng);
  return {re, im};
}

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
  double w = std::remainder(a, kTwoPi);
  if (w <= -kPi) w += kTwoPi;
  return w;
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }

}  // namespace isac
