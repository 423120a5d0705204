#include "casimir/kernels.hpp"

#include <atomic>

namespace casimir::kernels {
namespace {

const Backend* detect() {
#ifdef CASIMIR_HAVE_AVX2
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))
    return avx2_backend();
#endif
  return &scalar_backend();
}

std::atomic<const Backend*> g_active{nullptr};

}  // namespace

const Backend& active_backend() {
  const Backend* b = g_active.load(std::memory_order_acquire);
  if (!b) {
    b = detect();
    g_active.store(b, std::memory_order_release);
  }
  return *b;
}

bool set_backend(std::string_view name) {
  if (name == "auto") {
    g_active.store(detect(), std::memory_order_release);
    return true;
  }
  if (name == "scalar") {
    g_active.store(&scalar_backend(), std::memory_order_release);
    return true;
  }
#ifdef CASIMIR_HAVE_AVX2
  if (name == "avx2") {
    if (!(__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")))
      return false;
    g_active.store(avx2_backend(), std::memory_order_release);
    return true;
  }
#endif
  return false;
}

}  // namespace casimir::kernels
