#include "dpnm/simd/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

namespace dpnm::simd {

#ifdef DPNM_HAVE_AVX2
const KernelTable& avx2_table();
#endif

namespace {

std::atomic<bool> g_force_scalar{false};

bool env_requests_scalar() {
    const char* v = std::getenv("DPNM_SIMD");
    return v != nullptr && std::strcmp(v, "scalar") == 0;
}

}  // namespace

const KernelTable* avx2_kernels() {
#ifdef DPNM_HAVE_AVX2
    static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    if (supported) return &avx2_table();
#endif
    return nullptr;
}

const KernelTable& kernels() {
    static const bool env_scalar = env_requests_scalar();
    if (!g_force_scalar.load(std::memory_order_relaxed) && !env_scalar) {
        if (const KernelTable* t = avx2_kernels()) return *t;
    }
    return scalar_kernels();
}

void force_scalar(bool on) { g_force_scalar.store(on, std::memory_order_relaxed); }

}  // namespace dpnm::simd
