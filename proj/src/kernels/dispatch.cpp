#include <atomic>
#include <cstdlib>
#include <string_view>

#include "ertk/kernels.hpp"
#include "kernels_internal.hpp"

namespace ertk::kernels {

namespace {

bool host_has_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelSet* find(std::string_view name) {
  if (name == "scalar") return &scalar_kernels();
#if defined(__x86_64__) || defined(_M_X64)
  if (name == "avx2" && host_has_avx2()) return &avx2_kernels();
#endif
#if defined(__aarch64__)
  if (name == "neon") return &neon_kernels();
#endif
  return nullptr;
}

const KernelSet* pick_auto() {
#if defined(__x86_64__) || defined(_M_X64)
  if (host_has_avx2()) return &avx2_kernels();
#elif defined(__aarch64__)
  return &neon_kernels();
#endif
  return &scalar_kernels();
}

const KernelSet* initial_pick() {
  if (const char* env = std::getenv("ERTK_KERNEL")) {
    std::string_view want(env);
    if (want == "auto") return pick_auto();
    if (const KernelSet* k = find(want)) return k;
    // Unknown or unsupported name in the environment falls back to auto;
    // the --kernel flag is the checked way to pin a variant.
  }
  return pick_auto();
}

std::atomic<const KernelSet*> g_active{nullptr};

}  // namespace

const KernelSet& active() {
  const KernelSet* k = g_active.load(std::memory_order_acquire);
  if (k == nullptr) {
    // Benign race: concurrent first calls compute the same pick.
    k = initial_pick();
    g_active.store(k, std::memory_order_release);
  }
  return *k;
}

bool select(std::string_view name) {
  const KernelSet* k = (name == "auto") ? pick_auto() : find(name);
  if (k == nullptr) return false;
  g_active.store(k, std::memory_order_release);
  return true;
}

std::vector<const KernelSet*> supported() {
  std::vector<const KernelSet*> out{&scalar_kernels()};
#if defined(__x86_64__) || defined(_M_X64)
  if (host_has_avx2()) out.push_back(&avx2_kernels());
#endif
#if defined(__aarch64__)
  out.push_back(&neon_kernels());
#endif
  return out;
}

}  // namespace ertk::kernels
