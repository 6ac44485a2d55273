// kernels.hpp — data-parallel inner loops with scalar and AVX2 variants

#pragma once

#include <cstddef>
#include <string_view>

namespace dpnm::simd {

// out[i] = sum_k w[k] * exp(-((x[i] - c[k]) * inv_sigma)^2)
using GaussianSmearFn = void (*)(const double* x, std::size_t nx,
                                 const double* c, const double* w, std::size_t nc,
                                 double inv_sigma, double* out);

// sum_k w[k] * sin(x[k] * t)
using DotSinFn = double (*)(const double* w, const double* x, std::size_t n, double t);

// sum_k w[k] * sin(x[k] * t)^2
using DotSinSqFn = double (*)(const double* w, const double* x, std::size_t n, double t);

// Coherence objective on the reduced simplex p3 = p4 = (1 - p1 - p2)/2:
// out[i] = w12 sqrt(p1 p2) + 2 w13 sqrt(p1 p3) + 2 w23 sqrt(p2 p3) + w34 p3
// Points with p1 + p2 > 1 yield -inf.
struct SimplexWeights {
    double w12{0.0};
    double w13{0.0};
    double w23{0.0};
    double w34{0.0};
};
using SimplexObjectiveFn = void (*)(const double* p1, const double* p2, std::size_t n,
                                    const SimplexWeights& w, double* out);

struct KernelTable {
    std::string_view name;
    GaussianSmearFn gaussian_smear;
    DotSinFn dot_sin;
    DotSinSqFn dot_sin_sq;
    SimplexObjectiveFn simplex_objective;
};

const KernelTable& scalar_kernels();

// nullptr when the build or the CPU lacks AVX2+FMA
const KernelTable* avx2_kernels();

// Selected table: AVX2 when available unless DPNM_SIMD=scalar or force_scalar(true).
const KernelTable& kernels();
void force_scalar(bool on);

}  // namespace dpnm::simd
