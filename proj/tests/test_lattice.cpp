#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "dpnm/error.hpp"
#include "dpnm/lattice.hpp"

using namespace dpnm;

namespace {

ChainConfig canonical() { return ChainConfig{}; }

ChainConfig uniform_chain(int n_bulk, Boundary b = Boundary::Fixed) {
    ChainConfig c;
    c.n_bulk = n_bulk;
    c.m_defect = 1.0;
    c.k_interface = 1.0;
    c.boundary = b;
    return c;
}

// real roots of x^3 + a x^2 + b x + c by bisection on sign changes of a fine scan
std::vector<double> cubic_roots(double a, double b, double c, double lo, double hi) {
    auto p = [&](double x) { return ((x + a) * x + b) * x + c; };
    std::vector<double> roots;
    const int n = 3000;
    for (int i = 0; i < n; ++i) {
        double x0 = lo + (hi - lo) * i / n, x1 = lo + (hi - lo) * (i + 1) / n;
        if (p(x0) == 0.0) {
            roots.push_back(x0);
            continue;
        }
        if (p(x0) * p(x1) < 0) {
            for (int it = 0; it < 200; ++it) {
                const double m = 0.5 * (x0 + x1);
                ((p(x0) < 0) == (p(m) < 0) ? x0 : x1) = m;
            }
            roots.push_back(0.5 * (x0 + x1));
        }
    }
    return roots;
}

}  // namespace

TEST_CASE("dynamical matrix layout") {
    const DynamicalMatrix dm = build_dynamical_matrix(canonical());
    const int n = 2024;
    REQUIRE(dm.entries.rows() == n);
    CHECK(dm.entries == dm.entries.transpose());
    CHECK(dm.is_tridiagonal());
    CHECK(dm.site_masses[1011] == 2.0);
    CHECK(dm.site_masses[1012] == 2.0);
    CHECK(dm.site_masses[1010] == 1.0);
    CHECK(dm.site_springs[1011] == 0.1);
    CHECK(dm.site_springs[1012] == 1.0);
    CHECK(dm.site_springs[1013] == 0.1);
    CHECK(dm.site_springs[0] == 1.0);
    CHECK(dm.site_springs[n] == 1.0);
    // defect row: (k_I + K)/M on the diagonal, -K/M to the partner, -k_I/sqrt(mM) to the bulk
    CHECK(dm.entries(1011, 1011) == doctest::Approx(1.1 / 2.0));
    CHECK(dm.entries(1011, 1012) == doctest::Approx(-0.5));
    CHECK(dm.entries(1011, 1010) == doctest::Approx(-0.1 / std::sqrt(2.0)));
    CHECK(dm.entries(0, 0) == doctest::Approx(2.0));
}

TEST_CASE("configuration errors") {
    ChainConfig c;
    c.n_bulk = 21;
    CHECK_THROWS_AS(build_dynamical_matrix(c), ConfigError);
    c = ChainConfig{};
    c.m_bulk = 0.0;
    CHECK_THROWS_AS(build_dynamical_matrix(c), ConfigError);
    c = ChainConfig{};
    c.m_defect = -1.0;
    CHECK_THROWS_AS(build_dynamical_matrix(c), ConfigError);
}

TEST_CASE("isolated defect pair, free ends: {0, 2K/M}") {
    ChainConfig c;
    c.n_bulk = 0;
    c.boundary = Boundary::Free;
    c.k_defect = 1.5;
    c.m_defect = 3.0;
    const PhononModes m = solve_modes(build_dynamical_matrix(c));
    REQUIRE(m.size() == 2);
    CHECK(m.frequencies[0] == doctest::Approx(0.0));
    CHECK(m.frequencies[1] * m.frequencies[1] == doctest::Approx(2.0 * 1.5 / 3.0));
}

TEST_CASE("three-atom uniform chain against its characteristic cubic") {
    DynamicalMatrix dm;
    dm.entries = Eigen::MatrixXd{{2, -1, 0}, {-1, 2, -1}, {0, -1, 2}};
    const PhononModes m = solve_modes(dm);
    const Eigen::MatrixXd& a = dm.entries;
    const double tr = a.trace();
    const double minors = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0) + a(0, 0) * a(2, 2) - a(0, 2) * a(2, 0) +
                          a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1);
    const double det = a.determinant();
    const auto roots = cubic_roots(-tr, minors, -det, -1.0, 5.0);
    REQUIRE(roots.size() == 3);
    for (int i = 0; i < 3; ++i) CHECK(m.frequencies[i] * m.frequencies[i] == doctest::Approx(roots[i]).epsilon(1e-12));
}

TEST_CASE("dense path for non-tridiagonal input and 1x1 matrix") {
    DynamicalMatrix one;
    one.entries = Eigen::MatrixXd::Constant(1, 1, 2.25);
    CHECK(solve_modes(one).frequencies[0] == doctest::Approx(1.5));

    DynamicalMatrix ring;
    ring.entries = Eigen::MatrixXd{{2, -1, -1}, {-1, 2, -1}, {-1, -1, 2}};
    CHECK_FALSE(ring.is_tridiagonal());
    const PhononModes m = solve_modes(ring);
    CHECK(m.frequencies[0] == doctest::Approx(0.0).epsilon(1e-7));
    CHECK(m.frequencies[1] == doctest::Approx(std::sqrt(3.0)));
    CHECK(m.frequencies[2] == doctest::Approx(std::sqrt(3.0)));

    DynamicalMatrix bad;
    bad.entries = Eigen::MatrixXd{{-1.0, 0.0}, {0.0, 1.0}};
    CHECK_THROWS_AS(solve_modes(bad), ConvergenceError);
}

TEST_CASE("uniform fixed chain: exact standing-wave spectrum") {
    const int sites = 40;
    const PhononModes m = solve_modes(build_dynamical_matrix(uniform_chain(sites - 2)));
    for (int j = 1; j <= sites; ++j)
        CHECK(m.frequencies[j - 1] == doctest::Approx(2.0 * std::sin(j * std::numbers::pi / (2.0 * (sites + 1)))).epsilon(1e-12));
}

TEST_CASE("canonical preset eigen-decomposition invariants") {
    const DynamicalMatrix dm = build_dynamical_matrix(canonical());
    const PhononModes m = solve_modes(dm);
    const auto n = static_cast<Eigen::Index>(m.size());
    REQUIRE(n == 2024);
    CHECK(m.omega_max == doctest::Approx(2.0).epsilon(1e-4));
    CHECK(m.omega_max <= 2.0 * std::sqrt(1.0 / 1.0) * (1 + 1e-9));
    CHECK(std::is_sorted(m.frequencies.data(), m.frequencies.data() + n));

    const Eigen::MatrixXd& h = m.eigenvectors;
    const double orth = (h.transpose() * h - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
    CHECK(orth < 1e-8);

    const double eps = 1e-9 * m.omega_max * m.omega_max;
    const Eigen::MatrixXd recon = h * m.frequencies.cwiseAbs2().asDiagonal() * h.transpose();
    CHECK((recon - dm.entries).cwiseAbs().maxCoeff() < eps);
    const Eigen::MatrixXd resid = dm.entries * h - h * m.frequencies.cwiseAbs2().asDiagonal();
    CHECK(resid.cwiseAbs().maxCoeff() < eps);

    // fixed ends: no mode below 1e-6 omega_max
    CHECK(m.frequencies[0] > 1e-6 * m.omega_max);

    // sign convention: first non-negligible component positive
    for (Eigen::Index c = 0; c < n; c += 97) {
        const double scale = h.col(c).cwiseAbs().maxCoeff();
        for (Eigen::Index r = 0; r < n; ++r)
            if (std::abs(h(r, c)) > 1e-12 * scale) {
                CHECK(h(r, c) > 0.0);
                break;
            }
    }
}

TEST_CASE("free boundary has exactly one translational zero mode") {
    ChainConfig c = canonical();
    c.n_bulk = 200;
    c.boundary = Boundary::Free;
    const PhononModes m = solve_modes(build_dynamical_matrix(c));
    int zeros = 0;
    for (Eigen::Index i = 0; i < m.frequencies.size(); ++i) zeros += m.frequencies[i] < 1e-6 * m.omega_max;
    CHECK(zeros == 1);
}

TEST_CASE("density of states") {
    PhononModes single;
    single.frequencies = Eigen::VectorXd::Constant(1, 0.7);
    single.eigenvectors = Eigen::MatrixXd::Identity(1, 1);
    single.omega_max = 0.7;
    const Histogram h1 = density_of_states(single, 2, 1.4);
    CHECK(h1.counts == std::vector<std::size_t>{0, 1});
    CHECK_THROWS(density_of_states(single, 1));

    const PhononModes uni = solve_modes(build_dynamical_matrix(uniform_chain(2022)));
    const Histogram h = density_of_states(uni, 100);
    std::size_t total = 0;
    for (auto v : h.counts) total += v;
    CHECK(total == 2024);
    // 1D van Hove singularity at the band top
    CHECK(h.counts.back() > 3 * h.counts[50]);
    CHECK(h.counts.back() == *std::max_element(h.counts.begin(), h.counts.end()));
}

TEST_CASE("defect chain DOS tracks the uniform chain") {
    // ~20 modes per bin make a 2% per-bin tolerance sub-mode; the defect region is a
    // rank-5 perturbation (2 masses, 3 springs), so the counting functions differ by at most 5.
    const PhononModes def = solve_modes(build_dynamical_matrix(canonical()));
    const PhononModes uni = solve_modes(build_dynamical_matrix(uniform_chain(2022)));
    const double upper = std::max(def.omega_max, uni.omega_max);
    const Histogram a = density_of_states(def, 100, upper);
    const Histogram b = density_of_states(uni, 100, upper);
    long cum = 0;
    long worst_bin = 0, worst_cum = 0;
    for (std::size_t i = 0; i < a.counts.size(); ++i) {
        const long d = static_cast<long>(a.counts[i]) - static_cast<long>(b.counts[i]);
        cum += d;
        worst_bin = std::max(worst_bin, std::abs(d));
        worst_cum = std::max(worst_cum, std::abs(cum));
    }
    CHECK(worst_bin <= 2);
    CHECK(worst_cum <= 5);
}

TEST_CASE("periodic dispersion") {
    CHECK(periodic_dispersion(0.0, 1, 1, 1) == 0.0);
    CHECK(periodic_dispersion(std::numbers::pi, 1, 1, 1) == doctest::Approx(2.0));
    CHECK(periodic_dispersion(std::numbers::pi / 2, 1, 1, 1) == doctest::Approx(std::sqrt(2.0)));
    CHECK(periodic_dispersion(-std::numbers::pi / 2, 4, 1, 1) == doctest::Approx(2.0 * std::sqrt(2.0)));
    CHECK_THROWS_AS(periodic_dispersion(3.2, 1, 1, 1), std::domain_error);
}
