#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "dpnm/coupling.hpp"
#include "dpnm/lattice.hpp"
#include "dpnm/sdf.hpp"

using namespace dpnm;

namespace {

struct Bath {
    PhononModes modes;
    ModeCouplings couplings;
    SampledSDF sdf;
};

Bath make_bath(double k_interface) {
    ChainConfig c;
    c.k_interface = k_interface;
    Bath b;
    b.modes = solve_modes(build_dynamical_matrix(c));
    b.couplings = spin_phonon_couplings(b.modes, CouplingParams{});
    b.sdf = numerical_sdf(b.couplings, b.modes, 1e-2 * b.modes.omega_max, 2048);
    return b;
}

const Bath& canonical() {
    static const Bath b = make_bath(0.1);
    return b;
}

SampledSDF model_samples(const SdfParams& p, int n) {
    SampledSDF s;
    for (int i = 0; i < n; ++i) {
        const double w = p.omega_max * i / (n - 1);
        s.grid.push_back(w);
        s.values.push_back(eval_model(p, w, p.omega_max));
    }
    return s;
}

}  // namespace

TEST_CASE("numerical SDF of trivial inputs") {
    PhononModes m;
    m.frequencies = Eigen::Vector2d(0.5, 1.0);
    m.eigenvectors = Eigen::Matrix2d::Identity();
    m.omega_max = 2.0;
    ModeCouplings zero;
    zero.g = Eigen::Vector2d::Zero();
    const SampledSDF z = numerical_sdf(zero, m, 0.1, 128);
    CHECK(std::all_of(z.values.begin(), z.values.end(), [](double v) { return v == 0.0; }));
    CHECK(z.hr_sum == 0.0);

    // one unit coupling at omega = 1 on a grid that contains omega = 1
    ModeCouplings one;
    one.g = Eigen::Vector2d(0.0, 1.0);
    const SampledSDF s = numerical_sdf(one, m, 0.1, 201);
    REQUIRE(s.grid[100] == doctest::Approx(1.0));
    CHECK(s.values[100] == doctest::Approx(1.0 / (std::sqrt(std::numbers::pi) * 0.1)).epsilon(1e-12));
    CHECK(s.values[100] == doctest::Approx(5.6419).epsilon(1e-4));
    CHECK(s.values[90] == doctest::Approx(s.values[100] * std::exp(-1.0)).epsilon(1e-12));
    CHECK(s.hr_sum == 1.0);
    CHECK(sdf_integral(s) == doctest::Approx(1.0).epsilon(1e-6));

    CHECK_THROWS(numerical_sdf(one, m, 0.0, 128));
    CHECK_THROWS(numerical_sdf(one, m, 0.1, 63));
}

TEST_CASE("canonical SDF sum rule and edge behaviour") {
    const SampledSDF& s = canonical().sdf;
    CHECK(sdf_integral(s) == doctest::Approx(s.hr_sum).epsilon(1e-2));
    const double peak = *std::max_element(s.values.begin(), s.values.end());
    CHECK(std::all_of(s.values.begin(), s.values.end(), [](double v) { return v >= 0.0; }));
    // Couplings grow as sqrt(omega) and the sigma-wide smear leaks onto omega = 0, so
    // J(0) is small but not 1e-6-small; at the band top the smear is below 1e-6.
    CHECK(s.values.front() / peak < 1e-3);
    CHECK(s.values.back() / peak < 1e-6);
    // single dominant peak near the breathing frequency
    const auto ip = std::max_element(s.values.begin(), s.values.end()) - s.values.begin();
    CHECK(std::abs(s.grid[ip] - 1.0) < 0.05);
}

TEST_CASE("model evaluation") {
    SdfParams p{.j0 = 2.0, .gamma = 0.1, .omega_loc = 0.8, .n_exp = 3.0, .omega_max = 2.0};
    CHECK(eval_model(p, 0.0, 2.0) == 0.0);
    CHECK(eval_model(p, 2.0, 2.0) == 0.0);
    CHECK(eval_model(p, 2.5, 2.0) == 0.0);
    CHECK(eval_model(p, -1.0, 2.0) == 0.0);
    CHECK(eval_model(p, 0.8, 2.0) == doctest::Approx(2.0 * std::pow(std::sin(0.4 * std::numbers::pi), 4.0) * 20.0));
    SdfParams wide = p;
    wide.gamma = 0.4;
    CHECK(eval_model(wide, 0.8, 2.0) == doctest::Approx(eval_model(p, 0.8, 2.0) / 4.0));
    for (int i = 0; i <= 400; ++i) CHECK(eval_model(p, 2.0 * i / 400.0, 2.0) >= 0.0);
}

TEST_CASE("analytic Jacobian against central differences") {
    SdfParams p{.j0 = 1.3, .gamma = 0.07, .omega_loc = 0.9, .n_exp = 4.5, .omega_max = 2.0};
    std::vector<double> w;
    for (int i = 1; i < 50; ++i) w.push_back(2.0 * i / 50.0);
    std::vector<double> v, vp, vm;
    std::vector<std::array<double, 4>> jac, dummy;
    model_jacobian(p, w, v, jac);
    for (std::size_t i = 0; i < w.size(); ++i) CHECK(v[i] == doctest::Approx(eval_model(p, w[i], 2.0)));
    for (int k = 0; k < 4; ++k) {
        double* field[] = {&p.j0, &p.gamma, &p.omega_loc, &p.n_exp};
        const double x0 = *field[k];
        const double h = 1e-6 * x0;
        *field[k] = x0 + h;
        model_jacobian(p, w, vp, dummy);
        *field[k] = x0 - h;
        model_jacobian(p, w, vm, dummy);
        *field[k] = x0;
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double fd = (vp[i] - vm[i]) / (2.0 * h);
            CHECK(jac[i][k] == doctest::Approx(fd).epsilon(1e-5).scale(1e-8 * std::abs(v[i]) / h));
        }
    }
}

TEST_CASE("fit recovers parameters of exact model data") {
    for (const SdfParams truth : {SdfParams{.j0 = 0.4, .gamma = 0.05, .omega_loc = 1.02, .n_exp = 6.0, .omega_max = 2.0},
                                  SdfParams{.j0 = 3.0, .gamma = 0.3, .omega_loc = 0.6, .n_exp = 1.5, .omega_max = 2.0},
                                  SdfParams{.j0 = 1e-3, .gamma = 0.02, .omega_loc = 1.1, .n_exp = 8.0, .omega_max = 1.5}}) {
        const SdfParams f = fit_model(model_samples(truth, 2048));
        CHECK(f.converged);
        CHECK(f.goodness == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(f.j0 == doctest::Approx(truth.j0).epsilon(1e-4));
        CHECK(f.gamma == doctest::Approx(truth.gamma).epsilon(1e-4));
        CHECK(f.omega_loc == doctest::Approx(truth.omega_loc).epsilon(1e-4));
        CHECK(f.n_exp == doctest::Approx(truth.n_exp).epsilon(1e-4));
    }
}

TEST_CASE("envelope-dominated data: non-convergence is flagged, more iterations recover it") {
    // sin^13 suppresses the Lorentzian so the data maximum sits far from omega_loc
    const SdfParams truth{.j0 = 1e-3, .gamma = 0.02, .omega_loc = 1.4, .n_exp = 12.0, .omega_max = 1.5};
    const SampledSDF s = model_samples(truth, 2048);
    const SdfParams early = fit_model(s, FitOptions{.max_iterations = 10});
    CHECK_FALSE(early.converged);
    CHECK(early.iterations == 10);
    const SdfParams late = fit_model(s, FitOptions{.max_iterations = 5000});
    CHECK(late.converged);
    CHECK(late.gamma == doctest::Approx(truth.gamma).epsilon(1e-4));
    CHECK(late.omega_loc == doctest::Approx(truth.omega_loc).epsilon(1e-4));
}

TEST_CASE("fit input validation") {
    SampledSDF s;
    s.grid = {0, 1, 2, 3, 4, 5, 6, 7};
    s.values.assign(8, 0.0);
    CHECK_THROWS_AS(fit_model(s), std::invalid_argument);
    s.values.pop_back();
    CHECK_THROWS_AS(fit_model(s), std::invalid_argument);
}

TEST_CASE("fit is scale equivariant and deterministic") {
    const Bath& b = canonical();
    const SdfParams f1 = fit_model(b.sdf);
    SampledSDF scaled = b.sdf;
    for (double& v : scaled.values) v *= 9.0;
    const SdfParams f9 = fit_model(scaled);
    CHECK(f9.j0 == doctest::Approx(9.0 * f1.j0).epsilon(1e-8));
    CHECK(f9.gamma == doctest::Approx(f1.gamma).epsilon(1e-8));
    CHECK(f9.omega_loc == doctest::Approx(f1.omega_loc).epsilon(1e-8));
    CHECK(f9.n_exp == doctest::Approx(f1.n_exp).epsilon(1e-8));
    const SdfParams again = fit_model(b.sdf);
    CHECK(again.j0 == f1.j0);
    CHECK(again.gamma == f1.gamma);
    CHECK(f1.goodness >= 0.0);
    CHECK(f1.goodness <= 1.0);
}

TEST_CASE("sampled spectral function interpolates the grid") {
    const SampledSDF& s = canonical().sdf;
    const SpectralFunction j = SpectralFunction::from_samples(s);
    for (std::size_t i = 1; i < s.grid.size(); i += 37) CHECK(j(s.grid[i]) == doctest::Approx(s.values[i]).scale(1e-12));
    CHECK(j(0.0) == 0.0);
    CHECK(j(s.omega_max() * 1.01) == 0.0);
    CHECK(j.omega_max() == s.omega_max());
}

TEST_CASE("fit trends with interface stiffness") {
    double prev_gamma = 0.0, prev_peak = 1e300;
    for (double k : {0.1, 0.4, 0.7, 1.0}) {
        const SdfParams f = fit_model(make_bath(k).sdf);
        const double peak = eval_model(f, f.omega_loc, f.omega_max);
        CHECK(f.gamma > prev_gamma);
        CHECK(peak < prev_peak);
        prev_gamma = f.gamma;
        prev_peak = peak;
    }
}
