#include <atomic>
#include <cstdlib>
#include <cstring>

#include "isac/common.hpp"
#include "isac/kernels.hpp"

namespace isac::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* pick_default() {
  if (const char* env = std::getenv("ISAC_FORCE_SCALAR"); env && std::strcmp(env, "0") != 0) {
    return &scalar_table();
  }
  if (avx2_available()) return avx2_table();
  return &scalar_table();
}

std::atomic<const KernelTable*>& slot() {
  static std::atomic<const KernelTable*> current{pick_default()};
  return current;
}

}  // namespace

bool avx2_available() {
  static const bool ok = cpu_has_avx2() && avx2_table() != nullptr;
  return ok;
}

const KernelTable& active() { return *slot().load(std::memory_order_acquire); }

Isa active_isa() { return &active() == &scalar_table() ? Isa::Scalar : Isa::Avx2; }

std::string_view isa_name(Isa isa) { return isa == Isa::Scalar ? "scalar" : "avx2"; }

void force(Isa isa) {
  if (isa == Isa::Scalar) {
    slot().store(&scalar_table(), std::memory_order_release);
    return;
  }
  if (!avx2_available()) throw InvalidArgument("AVX2 kernels not available on this CPU/build");
  slot().store(avx2_table(), std::memory_order_release);
}

}  // namespace isac::kernels
