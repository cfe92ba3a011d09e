#pragma once

// Complex inner-loop kernels with a scalar reference implementation and an
// AVX2/FMA variant chosen once at startup from CPUID. Both variants honour the
// same contracts; results differ only by floating-point summation order.

#include <complex>
#include <span>
#include <string_view>

namespace isac::kernels {

using cplx = std::complex<double>;

enum class Isa { Scalar, Avx2 };

struct KernelTable {
  /// sum_i conj(a_i) * b_i
  cplx (*cdot)(std::span<const cplx> a, std::span<const cplx> b);
  /// sum_i |a_i|^2
  double (*energy)(std::span<const cplx> a);
  /// max_i |a_i|^2 (0 for an empty span)
  double (*max_abs2)(std::span<const cplx> a);
  /// out_i = a_i * b_i
  void (*cmul)(std::span<cplx> out, std::span<const cplx> a, std::span<const cplx> b);
  /// out_i = a_i * conj(b_i)
  void (*cmul_conj)(std::span<cplx> out, std::span<const cplx> a, std::span<const cplx> b);
  /// y_i += alpha * x_i
  void (*caxpy)(std::span<cplx> y, cplx alpha, std::span<const cplx> x);
};

const KernelTable& scalar_table();
/// nullptr when the binary was built without AVX2 support.
const KernelTable* avx2_table();

/// Best table the running CPU supports, unless overridden.
const KernelTable& active();
Isa active_isa();
std::string_view isa_name(Isa isa);

/// True when the CPU and the build both support AVX2+FMA.
bool avx2_available();

/// Forces a variant (tests, benchmarking). Throws if unsupported. The
/// environment variable ISAC_FORCE_SCALAR=1 has the same effect as
/// force(Isa::Scalar) at startup.
void force(Isa isa);

// Convenience wrappers over active().
inline cplx cdot(std::span<const cplx> a, std::span<const cplx> b) { return active().cdot(a, b); }
inline double energy(std::span<const cplx> a) { return active().energy(a); }
inline double max_abs2(std::span<const cplx> a) { return active().max_abs2(a); }
inline void cmul(std::span<cplx> out, std::span<const cplx> a, std::span<const cplx> b) {
  active().cmul(out, a, b);
}
inline void cmul_conj(std::span<cplx> out, std::span<const cplx> a, std::span<const cplx> b) {
  active().cmul_conj(out, a, b);
}
inline void caxpy(std::span<cplx> y, cplx alpha, std::span<const cplx> x) {
  active().caxpy(y, alpha, x);
}

}  // namespace isac::kernels
