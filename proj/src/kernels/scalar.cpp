#include "isac/kernels.hpp"

#include <algorithm>
#include <cassert>

namespace isac::kernels {
namespace {

cplx cdot_scalar(std::span<const cplx> a, std::span<const cplx> b) {
  assert(a.size() == b.size());
  double re = 0.0, im = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double ar = a[i].real(), ai = a[i].imag();
    const double br = b[i].real(), bi = b[i].imag();
    re += ar * br + ai * bi;
    im += ar * bi - ai * br;
  }
  return {re, im};
}

double energy_scalar(std::span<const cplx> a) {
  double acc = 0.0;
  for (const auto& v : a) acc += v.real() * v.real() + v.imag() * v.imag();
  return acc;
}

double max_abs2_scalar(std::span<const cplx> a) {
  double m = 0.0;
  for (const auto& v : a) m = std::max(m, v.real() * v.real() + v.imag() * v.imag());
  return m;
}

void cmul_scalar(std::span<cplx> out, std::span<const cplx> a, std::span<const cplx> b) {
  assert(out.size() == a.size() && a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double ar = a[i].real(), ai = a[i].imag();
    const double br = b[i].real(), bi = b[i].imag();
    out[i] = {ar * br - ai * bi, ar * bi + ai * br};
  }
}

void cmul_conj_scalar(std::span<cplx> out, std::span<const cplx> a, std::span<const cplx> b) {
  assert(out.size() == a.size() && a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double ar = a[i].real(), ai = a[i].imag();
    const double br = b[i].real(), bi = b[i].imag();
    out[i] = {ar * br + ai * bi, ai * br - ar * bi};
  }
}

void caxpy_scalar(std::span<cplx> y, cplx alpha, std::span<const cplx> x) {
  assert(y.size() == x.size());
  const double cr = alpha.real(), ci = alpha.imag();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xr = x[i].real(), xi = x[i].imag();
    y[i] += cplx{cr * xr - ci * xi, cr * xi + ci * xr};
  }
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{cdot_scalar,      energy_scalar,   max_abs2_scalar,
                                 cmul_scalar,      cmul_conj_scalar, caxpy_scalar};
  return table;
}

}  // namespace isac::kernels
