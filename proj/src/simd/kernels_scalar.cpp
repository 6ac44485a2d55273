#include "dpnm/simd/kernels.hpp"

#include <cmath>
#include <limits>

namespace dpnm::simd {
namespace {

void gaussian_smear(const double* x, std::size_t nx, const double* c, const double* w,
                    std::size_t nc, double inv_sigma, double* out) {
    for (std::size_t i = 0; i < nx; ++i) {
        double acc = 0.0;
        for (std::size_t k = 0; k < nc; ++k) {
            const double u = (x[i] - c[k]) * inv_sigma;
            acc += w[k] * std::exp(-u * u);
        }
        out[i] = acc;
    }
}

double dot_sin(const double* w, const double* x, std::size_t n, double t) {
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) acc += w[k] * std::sin(x[k] * t);
    return acc;
}

double dot_sin_sq(const double* w, const double* x, std::size_t n, double t) {
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double s = std::sin(x[k] * t);
        acc += w[k] * s * s;
    }
    return acc;
}

void simplex_objective(const double* p1, const double* p2, std::size_t n,
                       const SimplexWeights& w, double* out) {
    for (std::size_t i = 0; i < n; ++i) {
        const double rest = 1.0 - p1[i] - p2[i];
        if (rest < 0.0 || p1[i] < 0.0 || p2[i] < 0.0) {
            out[i] = -std::numeric_limits<double>::infinity();
            continue;
        }
        const double p3 = 0.5 * rest;
        out[i] = w.w12 * std::sqrt(p1[i] * p2[i]) + 2.0 * w.w13 * std::sqrt(p1[i] * p3) +
                 2.0 * w.w23 * std::sqrt(p2[i] * p3) + w.w34 * p3;
    }
}

}  // namespace

const KernelTable& scalar_kernels() {
    static const KernelTable table{"scalar", gaussian_smear, dot_sin, dot_sin_sq,
                                   simplex_objective};
    return table;
}

}  // namespace dpnm::simd
