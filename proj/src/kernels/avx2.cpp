// AVX2/FMA variants. This translation unit is compiled with -mavx2 -mfma and
// must only be entered after a CPUID check (see dispatch.cpp).

#include "isac/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>

#include <algorithm>
#include <cassert>

namespace isac::kernels {
namespace {

// One __m256d holds two interleaved complex doubles: [re0, im0, re1, im1].
inline __m256d load2(const cplx* p) { return _mm256_loadu_pd(reinterpret_cast<const double*>(p)); }
inline void store2(cplx* p, __m256d v) { _mm256_storeu_pd(reinterpret_cast<double*>(p), v); }

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// a * b for two packed complex pairs.
inline __m256d mul2(__m256d a, __m256d b) {
  const __m256d are = _mm256_movedup_pd(a);
  const __m256d aim = _mm256_permute_pd(a, 0xF);
  const __m256d bsw = _mm256_permute_pd(b, 0x5);
  return _mm256_fmaddsub_pd(are, b, _mm256_mul_pd(aim, bsw));
}

// Flips the sign of the odd (imaginary) lanes. Built on use: a namespace-scope
// __m256d would execute AVX code during static initialization.
inline __m256d odd_sign_mask() { return _mm256_set_pd(-0.0, 0.0, -0.0, 0.0); }

cplx cdot_avx2(std::span<const cplx> a, std::span<const cplx> b) {
  assert(a.size() == b.size());
  const std::size_t n = a.size();
  __m256d acc_re = _mm256_setzero_pd();  // lanes: ar*br, ai*bi
  __m256d acc_im = _mm256_setzero_pd();  // lanes: ar*bi, ai*br
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d va = load2(&a[i]);
    const __m256d vb = load2(&b[i]);
    acc_re = _mm256_fmadd_pd(va, vb, acc_re);
    acc_im = _mm256_fmadd_pd(va, _mm256_permute_pd(vb, 0x5), acc_im);
  }
  double re = hsum(acc_re);
  // even lanes carry +ar*bi, odd lanes carry ai*br which enters with a minus.
  const __m256d signed_im = _mm256_xor_pd(acc_im, odd_sign_mask());
  double im = hsum(signed_im);
  for (; i < n; ++i) {
    const double ar = a[i].real(), ai = a[i].imag();
    const double br = b[i].real(), bi = b[i].imag();
    re += ar * br + ai * bi;
    im += ar * bi - ai * br;
  }
  return {re, im};
}

double energy_avx2(std::span<const cplx> a) {
  const std::size_t n = a.size();
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v0 = load2(&a[i]);
    const __m256d v1 = load2(&a[i + 2]);
    acc0 = _mm256_fmadd_pd(v0, v0, acc0);
    acc1 = _mm256_fmadd_pd(v1, v1, acc1);
  }
  for (; i + 2 <= n; i += 2) {
    const __m256d v = load2(&a[i]);
    acc0 = _mm256_fmadd_pd(v, v, acc0);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i].real() * a[i].real() + a[i].imag() * a[i].imag();
  return s;
}

double max_abs2_avx2(std::span<const cplx> a) {
  const std::size_t n = a.size();
  __m256d m = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d v = load2(&a[i]);
    const __m256d sq = _mm256_mul_pd(v, v);
    m = _mm256_max_pd(m, _mm256_hadd_pd(sq, sq));
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, m);
  double best = std::max(std::max(lanes[0], lanes[1]), std::max(lanes[2], lanes[3]));
  for (; i < n; ++i) best = std::max(best, a[i].real() * a[i].real() + a[i].imag() * a[i].imag());
  return best;
}

void cmul_avx2(std::span<cplx> out, std::span<const cplx> a, std::span<const cplx> b) {
  assert(out.size() == a.size() && a.size() == b.size());
  const std::size_t n = a.size();
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) store2(&out[i], mul2(load2(&a[i]), load2(&b[i])));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

void cmul_conj_avx2(std::span<cplx> out, std::span<const cplx> a, std::span<const cplx> b) {
  assert(out.size() == a.size() && a.size() == b.size());
  const std::size_t n = a.size();
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d vb = _mm256_xor_pd(load2(&b[i]), odd_sign_mask());
    store2(&out[i], mul2(load2(&a[i]), vb));
  }
  for (; i < n; ++i) out[i] = a[i] * std::conj(b[i]);
}

void caxpy_avx2(std::span<cplx> y, cplx alpha, std::span<const cplx> x) {
  assert(y.size() == x.size());
  const std::size_t n = x.size();
  const __m256d cr = _mm256_set1_pd(alpha.real());
  const __m256d ci = _mm256_set1_pd(alpha.imag());
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d vx = load2(&x[i]);
    const __m256d prod = _mm256_fmaddsub_pd(cr, vx, _mm256_mul_pd(ci, _mm256_permute_pd(vx, 0x5)));
    store2(&y[i], _mm256_add_pd(load2(&y[i]), prod));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace

const KernelTable* avx2_table() {
  static const KernelTable table{cdot_avx2, energy_avx2,    max_abs2_avx2,
                                 cmul_avx2, cmul_conj_avx2, caxpy_avx2};
  return &table;
}

}  // namespace isac::kernels

#else

namespace isac::kernels {
const KernelTable* avx2_table() { return nullptr; }
}  // namespace isac::kernels

#endif
