// kernels_avx2.cpp — AVX2/FMA variants; compiled with -mavx2 -mfma

#include "dpnm/simd/kernels.hpp"

#include <immintrin.h>

#include <cmath>
#include <limits>

namespace dpnm::simd {
namespace {

inline __m256d poly3(__m256d x, double a, double b, double c) {
    return _mm256_fmadd_pd(_mm256_fmadd_pd(_mm256_set1_pd(a), x, _mm256_set1_pd(b)), x,
                           _mm256_set1_pd(c));
}

// Cephes exp: Pade form on [-ln2/2, ln2/2], ldexp by exponent-field add.
inline __m256d exp_pd(__m256d x) {
    const __m256d lo = _mm256_set1_pd(-708.0);
    const __m256d underflow = _mm256_cmp_pd(x, lo, _CMP_LT_OQ);
    x = _mm256_max_pd(x, lo);
    x = _mm256_min_pd(x, _mm256_set1_pd(709.0));

    const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(1.4426950408889634073599)),
                                      _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_fnmadd_pd(n, _mm256_set1_pd(6.93145751953125E-1), x);
    r = _mm256_fnmadd_pd(n, _mm256_set1_pd(1.42860682030941723212E-6), r);

    const __m256d rr = _mm256_mul_pd(r, r);
    const __m256d p = _mm256_mul_pd(
        r, poly3(rr, 1.26177193074810590878E-4, 3.02994407707441961300E-2, 9.99999999999999999910E-1));
    const __m256d q = _mm256_fmadd_pd(
        poly3(rr, 3.00198505138664455042E-6, 2.52448340349684104192E-3, 2.27265548208155028766E-1), rr,
        _mm256_set1_pd(2.00000000000000000009E0));
    __m256d e = _mm256_div_pd(p, _mm256_sub_pd(q, p));
    e = _mm256_fmadd_pd(_mm256_set1_pd(2.0), e, _mm256_set1_pd(1.0));

    // 2^n with n in [-1022, 1023]: split in two factors so n = -1022 and below stays normal
    const __m128i ni = _mm256_cvtpd_epi32(n);
    const __m128i half = _mm_srai_epi32(ni, 1);
    const __m128i rest = _mm_sub_epi32(ni, half);
    auto pow2 = [](__m128i k) {
        const __m256i k64 = _mm256_cvtepi32_epi64(k);
        return _mm256_castsi256_pd(
            _mm256_slli_epi64(_mm256_add_epi64(k64, _mm256_set1_epi64x(1023)), 52));
    };
    e = _mm256_mul_pd(_mm256_mul_pd(e, pow2(half)), pow2(rest));
    return _mm256_andnot_pd(underflow, e);
}

// Cephes sin with three-part pi/4 reduction; accurate for |x| < 2^29.
inline __m256d sin_pd(__m256d x) {
    const __m256d sign_bit = _mm256_set1_pd(-0.0);
    __m256d sign = _mm256_and_pd(x, sign_bit);
    x = _mm256_andnot_pd(sign_bit, x);

    __m256d y = _mm256_floor_pd(_mm256_mul_pd(x, _mm256_set1_pd(1.27323954473516268615)));
    const __m256d odd = _mm256_sub_pd(
        y, _mm256_mul_pd(_mm256_set1_pd(2.0), _mm256_floor_pd(_mm256_mul_pd(y, _mm256_set1_pd(0.5)))));
    y = _mm256_add_pd(y, odd);
    const __m256d oct = _mm256_sub_pd(
        y, _mm256_mul_pd(_mm256_set1_pd(8.0), _mm256_floor_pd(_mm256_mul_pd(y, _mm256_set1_pd(0.125)))));

    const __m256d use_cos = _mm256_or_pd(_mm256_cmp_pd(oct, _mm256_set1_pd(2.0), _CMP_EQ_OQ),
                                         _mm256_cmp_pd(oct, _mm256_set1_pd(6.0), _CMP_EQ_OQ));
    const __m256d flip = _mm256_cmp_pd(oct, _mm256_set1_pd(4.0), _CMP_GE_OQ);
    sign = _mm256_xor_pd(sign, _mm256_and_pd(flip, sign_bit));

    __m256d z = _mm256_fnmadd_pd(y, _mm256_set1_pd(7.85398125648498535156E-1), x);
    z = _mm256_fnmadd_pd(y, _mm256_set1_pd(3.77489470793079817668E-8), z);
    z = _mm256_fnmadd_pd(y, _mm256_set1_pd(2.69515142907905952645E-15), z);
    const __m256d zz = _mm256_mul_pd(z, z);

    __m256d ps = _mm256_set1_pd(1.58962301576546568060E-10);
    ps = _mm256_fmadd_pd(ps, zz, _mm256_set1_pd(-2.50507477628578072866E-8));
    ps = _mm256_fmadd_pd(ps, zz, _mm256_set1_pd(2.75573136213857245213E-6));
    ps = _mm256_fmadd_pd(ps, zz, _mm256_set1_pd(-1.98412698295895385996E-4));
    ps = _mm256_fmadd_pd(ps, zz, _mm256_set1_pd(8.33333333332211858878E-3));
    ps = _mm256_fmadd_pd(ps, zz, _mm256_set1_pd(-1.66666666666666307295E-1));
    const __m256d s = _mm256_fmadd_pd(_mm256_mul_pd(z, zz), ps, z);

    __m256d pc = _mm256_set1_pd(-1.13585365213876817300E-11);
    pc = _mm256_fmadd_pd(pc, zz, _mm256_set1_pd(2.08757008419747316778E-9));
    pc = _mm256_fmadd_pd(pc, zz, _mm256_set1_pd(-2.75573141792967388112E-7));
    pc = _mm256_fmadd_pd(pc, zz, _mm256_set1_pd(2.48015872888517045348E-5));
    pc = _mm256_fmadd_pd(pc, zz, _mm256_set1_pd(-1.38888888888730564116E-3));
    pc = _mm256_fmadd_pd(pc, zz, _mm256_set1_pd(4.16666666666665929218E-2));
    __m256d c = _mm256_fnmadd_pd(_mm256_set1_pd(0.5), zz, _mm256_set1_pd(1.0));
    c = _mm256_fmadd_pd(_mm256_mul_pd(zz, zz), pc, c);

    return _mm256_xor_pd(_mm256_blendv_pd(s, c, use_cos), sign);
}

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

void gaussian_smear(const double* x, std::size_t nx, const double* c, const double* w,
                    std::size_t nc, double inv_sigma, double* out) {
    const __m256d is = _mm256_set1_pd(inv_sigma);
    for (std::size_t i = 0; i < nx; ++i) {
        const __m256d xi = _mm256_set1_pd(x[i]);
        __m256d acc = _mm256_setzero_pd();
        std::size_t k = 0;
        for (; k + 4 <= nc; k += 4) {
            const __m256d u = _mm256_mul_pd(_mm256_sub_pd(xi, _mm256_loadu_pd(c + k)), is);
            const __m256d g = exp_pd(_mm256_sub_pd(_mm256_setzero_pd(), _mm256_mul_pd(u, u)));
            acc = _mm256_fmadd_pd(_mm256_loadu_pd(w + k), g, acc);
        }
        double tail = 0.0;
        for (; k < nc; ++k) {
            const double u = (x[i] - c[k]) * inv_sigma;
            tail += w[k] * std::exp(-u * u);
        }
        out[i] = hsum(acc) + tail;
    }
}

double dot_sin(const double* w, const double* x, std::size_t n, double t) {
    const __m256d tv = _mm256_set1_pd(t);
    __m256d acc = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        const __m256d s = sin_pd(_mm256_mul_pd(_mm256_loadu_pd(x + k), tv));
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(w + k), s, acc);
    }
    double tail = 0.0;
    for (; k < n; ++k) tail += w[k] * std::sin(x[k] * t);
    return hsum(acc) + tail;
}

double dot_sin_sq(const double* w, const double* x, std::size_t n, double t) {
    const __m256d tv = _mm256_set1_pd(t);
    __m256d acc = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        const __m256d s = sin_pd(_mm256_mul_pd(_mm256_loadu_pd(x + k), tv));
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(w + k), _mm256_mul_pd(s, s), acc);
    }
    double tail = 0.0;
    for (; k < n; ++k) {
        const double s = std::sin(x[k] * t);
        tail += w[k] * s * s;
    }
    return hsum(acc) + tail;
}

void simplex_objective(const double* p1, const double* p2, std::size_t n,
                       const SimplexWeights& w, double* out) {
    const __m256d zero = _mm256_setzero_pd();
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d half = _mm256_set1_pd(0.5);
    const __m256d ninf = _mm256_set1_pd(-std::numeric_limits<double>::infinity());
    const __m256d w12 = _mm256_set1_pd(w.w12);
    const __m256d w13 = _mm256_set1_pd(2.0 * w.w13);
    const __m256d w23 = _mm256_set1_pd(2.0 * w.w23);
    const __m256d w34 = _mm256_set1_pd(w.w34);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d a = _mm256_loadu_pd(p1 + i);
        const __m256d b = _mm256_loadu_pd(p2 + i);
        const __m256d rest = _mm256_sub_pd(_mm256_sub_pd(one, a), b);
        const __m256d bad = _mm256_or_pd(
            _mm256_cmp_pd(rest, zero, _CMP_LT_OQ),
            _mm256_or_pd(_mm256_cmp_pd(a, zero, _CMP_LT_OQ), _mm256_cmp_pd(b, zero, _CMP_LT_OQ)));
        const __m256d p3 = _mm256_max_pd(_mm256_mul_pd(half, rest), zero);
        const __m256d ac = _mm256_max_pd(a, zero);
        const __m256d bc = _mm256_max_pd(b, zero);
        __m256d g = _mm256_mul_pd(w34, p3);
        g = _mm256_fmadd_pd(w12, _mm256_sqrt_pd(_mm256_mul_pd(ac, bc)), g);
        g = _mm256_fmadd_pd(w13, _mm256_sqrt_pd(_mm256_mul_pd(ac, p3)), g);
        g = _mm256_fmadd_pd(w23, _mm256_sqrt_pd(_mm256_mul_pd(bc, p3)), g);
        _mm256_storeu_pd(out + i, _mm256_blendv_pd(g, ninf, bad));
    }
    if (i < n) scalar_kernels().simplex_objective(p1 + i, p2 + i, n - i, w, out + i);
}

}  // namespace

const KernelTable& avx2_table() {
    static const KernelTable table{"avx2", gaussian_smear, dot_sin, dot_sin_sq, simplex_objective};
    return table;
}

}  // namespace dpnm::simd
