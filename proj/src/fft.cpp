#include "isac/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <utility>

namespace isac::fft {
namespace {

// FFTW's planner is not re-entrant; execution of an existing plan on new
// arrays is. Plans are created once per (size, direction) and kept for the
// process lifetime.
class PlanCache {
 public:
  fftw_plan get(std::size_t n, int sign) {
    std::lock_guard lock(mu_);
    auto key = std::make_pair(n, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    // In-place plan: fftw_execute_dft requires the same in/out aliasing.
    auto* buf = fftw_alloc_complex(n);
    fftw_plan p = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, sign,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(buf);
    plans_.emplace(key, p);
    return p;
  }

  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

 private:
  std::mutex mu_;
  std::map<std::pair<std::size_t, int>, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache c;
  return c;
}

void run(std::span<cplx> x, int sign) {
  if (x.size() <= 1) return;
  fftw_plan p = cache().get(x.size(), sign);
  auto* data = reinterpret_cast<fftw_complex*>(x.data());
  fftw_execute_dft(p, data, data);
}

}  // namespace

void forward(std::span<cplx> x) { run(x, FFTW_FORWARD); }

void inverse(std::span<cplx> x) {
  run(x, FFTW_BACKWARD);
  const double scale = 1.0 / static_cast<double>(x.size());
  for (auto& v : x) v *= scale;
}

double bin_frequency(std::size_t k, std::size_t L, double fs) {
  const auto half = (L + 1) / 2;
  const double kk = k < half ? static_cast<double>(k) : static_cast<double>(k) - static_cast<double>(L);
  return kk * fs / static_cast<double>(L);
}

std::size_t good_size(std::size_t n) {
  if (n <= 1) return 1;
  for (std::size_t m = n;; ++m) {
    std::size_t r = m;
    for (std::size_t p : {2u, 3u, 5u})
      while (r % p == 0) r /= p;
    if (r == 1) return m;
  }
}

std::uint64_t flop_cost(std::size_t L) {
  if (L <= 1) return 0;
  return static_cast<std::uint64_t>(std::llround(static_cast<double>(L) * std::log2(static_cast<double>(L))));
}

}  // namespace isac::fft
