#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "dpnm/simd/kernels.hpp"

using dpnm::simd::KernelTable;

namespace {

std::vector<double> uniform(std::size_t n, double lo, double hi, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> d(lo, hi);
    std::vector<double> v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

double naive_sin_sum(const std::vector<double>& w, const std::vector<double>& x, double t, bool squared) {
    long double acc = 0.0L;
    for (std::size_t k = 0; k < w.size(); ++k) {
        const long double s = std::sin(static_cast<long double>(x[k]) * t);
        acc += w[k] * (squared ? s * s : s);
    }
    return static_cast<double>(acc);
}

}  // namespace

TEST_CASE("scalar kernels against long-double loops") {
    const auto& k = dpnm::simd::scalar_kernels();
    const auto w = uniform(37, -1.0, 1.0, 1);
    const auto x = uniform(37, 0.0, 2.0, 2);
    for (double t : {0.0, 0.3, 17.0, 650.0}) {
        CHECK(k.dot_sin(w.data(), x.data(), w.size(), t) == doctest::Approx(naive_sin_sum(w, x, t, false)).epsilon(1e-12));
        CHECK(k.dot_sin_sq(w.data(), x.data(), w.size(), t) == doctest::Approx(naive_sin_sum(w, x, t, true)).epsilon(1e-12));
    }

    const double grid[] = {0.0, 1.0};
    const double c[] = {1.0};
    const double wt[] = {2.0};
    double out[2];
    k.gaussian_smear(grid, 2, c, wt, 1, 10.0, out);
    CHECK(out[1] == doctest::Approx(2.0));
    CHECK(out[0] == doctest::Approx(2.0 * std::exp(-100.0)));
}

TEST_CASE("simplex objective handles the constraint boundary") {
    const auto& k = dpnm::simd::scalar_kernels();
    const dpnm::simd::SimplexWeights w{1.0, 0.5, 0.25, 0.0};
    const double p1[] = {0.25, 0.6, 0.0};
    const double p2[] = {0.25, 0.6, 0.0};
    double out[3];
    k.simplex_objective(p1, p2, 3, w, out);
    // p3 = p4 = 0.25
    CHECK(out[0] == doctest::Approx(0.25 + 2 * 0.5 * 0.25 + 2 * 0.25 * 0.25));
    CHECK(out[1] == -std::numeric_limits<double>::infinity());
    CHECK(out[2] == doctest::Approx(0.0));
}

TEST_CASE("AVX2 kernels match the scalar reference") {
    const KernelTable* avx = dpnm::simd::avx2_kernels();
    if (avx == nullptr) {
        MESSAGE("AVX2 unavailable; equivalence test skipped");
        return;
    }
    const auto& ref = dpnm::simd::scalar_kernels();

    SUBCASE("dot_sin and dot_sin_sq across tail lengths and large phases") {
        for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 8u, 13u, 1021u}) {
            const auto w = uniform(n, -1.0, 1.0, 10 + n);
            const auto x = uniform(n, 0.0, 2.0, 20 + n);
            double scale = 0.0;
            for (double v : w) scale += std::abs(v);
            for (double t : {0.0, 1e-3, 0.7, 31.4, 690.0, 5.0e4}) {
                CHECK(std::abs(avx->dot_sin(w.data(), x.data(), n, t) - ref.dot_sin(w.data(), x.data(), n, t)) <=
                      1e-14 * (scale + 1.0));
                CHECK(std::abs(avx->dot_sin_sq(w.data(), x.data(), n, t) - ref.dot_sin_sq(w.data(), x.data(), n, t)) <=
                      1e-14 * (scale + 1.0));
            }
        }
    }

    SUBCASE("sin sign and quadrant handling at exact multiples of pi/4") {
        std::vector<double> x, w;
        for (int q = -16; q <= 16; ++q) {
            x.push_back(q * M_PI / 4.0);
            w.push_back(1.0);
        }
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double one = 1.0;
            CHECK(avx->dot_sin(&one, &x[i], 1, 1.0) == doctest::Approx(std::sin(x[i])).epsilon(1e-14));
            // lane path: replicate the value four times
            const double xs[4] = {x[i], x[i], x[i], x[i]};
            const double ws[4] = {1.0, 0.0, 0.0, 0.0};
            CHECK(std::abs(avx->dot_sin(ws, xs, 4, 1.0) - std::sin(x[i])) < 1e-15);
        }
    }

    SUBCASE("gaussian smearing, including underflow of far tails") {
        for (std::size_t nc : {1u, 4u, 7u, 2024u}) {
            const auto grid = uniform(129, 0.0, 2.0, 30 + nc);
            const auto c = uniform(nc, 0.0, 2.0, 40 + nc);
            const auto w = uniform(nc, 0.0, 3.0, 50 + nc);
            for (double inv_sigma : {0.5, 50.0, 5000.0}) {
                std::vector<double> a(grid.size()), b(grid.size());
                avx->gaussian_smear(grid.data(), grid.size(), c.data(), w.data(), nc, inv_sigma, a.data());
                ref.gaussian_smear(grid.data(), grid.size(), c.data(), w.data(), nc, inv_sigma, b.data());
                for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-14 * (std::abs(b[i]) + 1e-300) + 1e-300);
            }
        }
    }

    SUBCASE("simplex objective") {
        const auto p1 = uniform(1003, -0.05, 1.0, 60);
        const auto p2 = uniform(1003, -0.05, 1.0, 61);
        const dpnm::simd::SimplexWeights w{0.7, 0.3, 0.9, 0.2};
        std::vector<double> a(p1.size()), b(p1.size());
        avx->simplex_objective(p1.data(), p2.data(), p1.size(), w, a.data());
        ref.simplex_objective(p1.data(), p2.data(), p1.size(), w, b.data());
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (std::isinf(b[i])) CHECK(a[i] == b[i]);
            else CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-14));
        }
    }
}

TEST_CASE("dispatch honours the scalar override") {
    dpnm::simd::force_scalar(true);
    CHECK(dpnm::simd::kernels().name == "scalar");
    dpnm::simd::force_scalar(false);
    if (dpnm::simd::avx2_kernels() != nullptr && std::getenv("DPNM_SIMD") == nullptr)
        CHECK(dpnm::simd::kernels().name == "avx2");
}
