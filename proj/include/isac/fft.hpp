#pragma once

#include <cstddef>
#include <span>

#include "isac/common.hpp"

namespace isac::fft {

/// In-place forward DFT, X[k] = sum_n x[n] e^{-j2pi kn/L}. Unnormalized.
void forward(std::span<cplx> x);

/// In-place inverse DFT scaled by 1/L, so inverse(forward(x)) == x.
void inverse(std::span<cplx> x);

/// Signed frequency (Hz) of bin k for an L-point DFT at sample rate fs, in
/// FFT order: bins at or above ceil(L/2) map to negative frequencies.
double bin_frequency(std::size_t k, std::size_t L, double fs);

/// Smallest 2^a 3^b 5^c >= n.
std::size_t good_size(std::size_t n);

/// Cost of one L-point transform under the toolkit's flop convention:
/// L * log2(L) counted operations.
std::uint64_t flop_cost(std::size_t L);

}  // namespace isac::fft
