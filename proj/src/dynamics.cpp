#include "dpnm/dynamics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/numeric/odeint.hpp>

#include "dpnm/error.hpp"
#include "dpnm/quadrature.hpp"
#include "dpnm/simd/kernels.hpp"

namespace dpnm {

double thermal_factor(double omega, double temperature) {
    if (temperature <= 0.0) return 1.0;
    const double x = omega / (2.0 * temperature);
    if (x > 20.0) return 1.0 + 2.0 * std::exp(-2.0 * x);
    return 1.0 / std::tanh(x);
}

namespace {

std::vector<double> frequency_edges(const SpectralFunction& j, double t) {
    const double wmax = j.omega_max();
    std::vector<double> bp = j.breakpoints();
    if (t * wmax > 50.0) {
        const double step = std::numbers::pi / t;
        for (double z = step; z < wmax; z += step) bp.push_back(z);
    }
    return panel_edges(0.0, wmax, wmax, bp);
}

// 2 sin^2(x/2) / x^2, the (1 - cos x)/x^2 factor without cancellation
inline double versine_ratio(double w, double t) {
    const double s = std::sin(0.5 * w * t);
    return 2.0 * s * s / (w * w);
}

}  // namespace

double canonical_rate(const SpectralFunction& j, double temperature, double t, const RateOptions& opt) {
    if (t < 0.0 || temperature < 0.0) throw std::invalid_argument("t and temperature must be non-negative");
    if (t == 0.0) return 0.0;
    auto f = [&](double w) { return 3.0 * j(w) * thermal_factor(w, temperature) * std::sin(w * t) / w; };
    return integrate_adaptive(f, frequency_edges(j, t), opt.rel_tol).value;
}

double upsilon(const SpectralFunction& j, double temperature, double t, const RateOptions& opt) {
    if (t < 0.0 || temperature < 0.0) throw std::invalid_argument("t and temperature must be non-negative");
    if (t == 0.0) return 0.0;
    auto f = [&](double w) { return 3.0 * j(w) * thermal_factor(w, temperature) * versine_ratio(w, t); };
    return integrate_adaptive(f, frequency_edges(j, 0.5 * t), opt.rel_tol).value;
}

double upsilon_bound(const SpectralFunction& j, double temperature, const RateOptions& opt) {
    auto f = [&](double w) { return 6.0 * j(w) * thermal_factor(w, temperature) / (w * w); };
    return integrate_adaptive(f, frequency_edges(j, 0.0), opt.rel_tol).value;
}

RateEngine::RateEngine(const SpectralFunction& j, double temperature, double t_max)
    : temperature_(temperature) {
    if (temperature < 0.0 || t_max < 0.0) throw std::invalid_argument("t_max and temperature must be non-negative");
    const double wmax = j.omega_max();
    double width = std::min(0.5 * j.feature_width(), wmax / 64.0);
    if (t_max > 0.0) width = std::min(width, 0.5 * std::numbers::pi / t_max);
    const QuadratureRule rule = composite_gauss_legendre(panel_edges(0.0, wmax, width, j.breakpoints()));

    for (std::size_t k = 0; k < rule.x.size(); ++k) {
        const double w = rule.x[k];
        const double jw = j(w);
        if (jw == 0.0) continue;
        const double base = 3.0 * rule.w[k] * jw * thermal_factor(w, temperature) / w;
        omega_.push_back(w);
        half_omega_.push_back(0.5 * w);
        rate_w_.push_back(base);
        ups_w_.push_back(2.0 * base / w);
    }
}

double RateEngine::rate(double t) const {
    return simd::kernels().dot_sin(rate_w_.data(), omega_.data(), omega_.size(), t);
}

double RateEngine::upsilon(double t) const {
    return simd::kernels().dot_sin_sq(ups_w_.data(), half_omega_.data(), half_omega_.size(), t);
}

RateProfile RateEngine::profile(const std::vector<double>& times) const {
    RateProfile p;
    p.temperature = temperature_;
    p.times = times;
    p.gamma_c.resize(times.size());
    p.upsilon.resize(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
        p.gamma_c[i] = rate(times[i]);
        p.upsilon[i] = upsilon(times[i]);
    }
    return p;
}

double lambda_amplitude(const SdfParams& p, double temperature) {
    const double s = std::sin(std::numbers::pi * p.omega_loc / p.omega_max);
    const double alpha = 3.0 * std::numbers::pi * p.j0 * std::pow(s, 1.0 + p.n_exp) / p.omega_loc;
    return alpha * thermal_factor(p.omega_loc, temperature);
}

double rate_approx(const SdfParams& p, double temperature, double t) {
    return lambda_amplitude(p, temperature) * std::sin(p.omega_loc * t) * std::exp(-0.5 * p.gamma * t);
}

double upsilon_infinity(const SdfParams& p, double temperature) {
    const double w = p.omega_loc;
    return lambda_amplitude(p, temperature) * w / (w * w + 0.25 * p.gamma * p.gamma);
}

double upsilon_approx(const SdfParams& p, double temperature, double t) {
    const double w = p.omega_loc;
    const double env = std::exp(-0.5 * p.gamma * t);
    return upsilon_infinity(p, temperature) *
           (1.0 - env * (std::cos(w * t) + 0.5 * p.gamma / w * std::sin(w * t)));
}

RateProfile approximate_profile(const SdfParams& params, double temperature, const std::vector<double>& times) {
    RateProfile p;
    p.temperature = temperature;
    p.times = times;
    for (double t : times) {
        p.gamma_c.push_back(rate_approx(params, temperature, t));
        p.upsilon.push_back(upsilon_approx(params, temperature, t));
    }
    return p;
}

std::vector<double> uniform_times(double t_end, std::size_t n_intervals) {
    if (n_intervals == 0 || !(t_end > 0.0)) throw std::invalid_argument("need t_end > 0 and n_intervals >= 1");
    std::vector<double> t(n_intervals + 1);
    for (std::size_t i = 0; i <= n_intervals; ++i)
        t[i] = t_end * static_cast<double>(i) / static_cast<double>(n_intervals);
    t.back() = t_end;
    return t;
}

BellSystem BellSystem::make(double energy_scale) {
    BellSystem s;
    s.energy_scale = energy_scale;
    s.energies << energy_scale, 0.0, -0.5 * energy_scale, -0.5 * energy_scale;
    const double c = std::sqrt(2.0 / 3.0);
    s.dephasing << -c, 0.0, 0.5 * c, 0.5 * c;
    for (int i = 0; i < 4; ++i)
        for (int k = 0; k < 4; ++k) {
            const double d = s.dephasing[i] - s.dephasing[k];
            s.xi(i, k) = 0.5 * d * d;
        }
    return s;
}

BellDensityMatrix BellDensityMatrix::from_amplitudes(const Eigen::Vector4cd& c) {
    const double n = c.squaredNorm();
    if (!(n > 0.0)) throw std::invalid_argument("amplitude vector must be non-zero");
    BellDensityMatrix d;
    d.rho = c * c.adjoint() / n;
    return d;
}

void BellDensityMatrix::validate(double tol) const {
    if (std::abs(rho.trace() - 1.0) > tol) throw std::invalid_argument("density matrix trace differs from 1");
    if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > tol) throw std::invalid_argument("density matrix not Hermitian");
    for (int i = 0; i < 4; ++i) {
        const double p = rho(i, i).real();
        if (p < -tol || p > 1.0 + tol) throw std::invalid_argument("population outside [0, 1]");
    }
}

BellDensityMatrix evolve_analytic(const BellDensityMatrix& rho0, const BellSystem& system, double upsilon_t) {
    if (upsilon_t < 0.0) throw std::invalid_argument("upsilon must be non-negative");
    BellDensityMatrix out = rho0;
    for (int i = 0; i < 4; ++i)
        for (int k = 0; k < 4; ++k)
            if (i != k) out.rho(i, k) *= std::exp(-system.xi(i, k) * upsilon_t);
    return out;
}

namespace {

using OdeState = std::array<double, 32>;

Eigen::Matrix4cd unpack(const OdeState& x) {
    Eigen::Matrix4cd m;
    for (int i = 0; i < 4; ++i)
        for (int k = 0; k < 4; ++k) m(i, k) = {x[8 * i + 2 * k], x[8 * i + 2 * k + 1]};
    return m;
}

void pack(const Eigen::Matrix4cd& m, OdeState& x) {
    for (int i = 0; i < 4; ++i)
        for (int k = 0; k < 4; ++k) {
            x[8 * i + 2 * k] = m(i, k).real();
            x[8 * i + 2 * k + 1] = m(i, k).imag();
        }
}

}  // namespace

std::vector<BellDensityMatrix> evolve_ode(const BellDensityMatrix& rho0, const BellSystem& system,
                                          const std::function<double(double)>& rate,
                                          const std::vector<double>& times, const OdeOptions& opt) {
    namespace odeint = boost::numeric::odeint;
    if (times.empty()) return {};
    if (!std::is_sorted(times.begin(), times.end())) throw std::invalid_argument("output times must be ascending");

    const Eigen::Matrix4cd l = system.dephasing.cast<std::complex<double>>().asDiagonal();
    const Eigen::Matrix4cd l2 = l.adjoint() * l;
    auto rhs = [&](const OdeState& x, OdeState& dx, double t) {
        const Eigen::Matrix4cd r = unpack(x);
        const Eigen::Matrix4cd d = rate(t) * (l * r * l.adjoint() - 0.5 * (l2 * r + r * l2));
        pack(d, dx);
    };

    OdeState x{};
    pack(rho0.rho, x);
    std::vector<BellDensityMatrix> out;
    out.reserve(times.size());
    auto observer = [&](const OdeState& s, double) { out.push_back({unpack(s)}); };

    auto stepper = odeint::make_controlled(opt.abs_tol, opt.rel_tol, odeint::runge_kutta_dopri5<OdeState>());
    const double span = times.back() - times.front();
    const double dt0 = span > 0.0 ? span * 1e-4 : 1e-3;
    try {
        odeint::integrate_times(stepper, rhs, x, times.begin(), times.end(), dt0, observer,
                                odeint::max_step_checker(100000));
    } catch (const odeint::step_adjustment_error& e) {
        throw ConvergenceError(std::string("ODE step-size underflow: ") + e.what());
    } catch (const odeint::no_progress_error& e) {
        throw ConvergenceError(std::string("ODE integration stalled: ") + e.what());
    }
    return out;
}

std::vector<BellDensityMatrix> evolve_ode(const BellDensityMatrix& rho0, const BellSystem& system,
                                          const RateProfile& profile, const std::vector<double>& times,
                                          const OdeOptions& opt) {
    const std::size_t n = profile.times.size();
    if (n < 4) throw std::invalid_argument("rate profile needs at least 4 samples");
    const double h = (profile.times.back() - profile.times.front()) / static_cast<double>(n - 1);
    for (std::size_t i = 1; i < n; ++i)
        if (std::abs(profile.times[i] - profile.times[0] - h * static_cast<double>(i)) > 1e-9 * (h * n))
            throw std::invalid_argument("rate profile must be uniformly sampled");
    if (!times.empty() && (times.front() < profile.times.front() || times.back() > profile.times.back() * (1 + 1e-12)))
        throw std::invalid_argument("output times exceed the rate profile");

    const auto& g = profile.gamma_c;
    double d0 = 0.0, d1 = 0.0;
    if (n >= 6) {
        constexpr std::array<double, 6> c{-137.0 / 60.0, 5.0, -5.0, 10.0 / 3.0, -5.0 / 4.0, 1.0 / 5.0};
        for (std::size_t k = 0; k < 6; ++k) {
            d0 += c[k] * g[k];
            d1 -= c[k] * g[n - 1 - k];
        }
        d0 /= h;
        d1 /= h;
    } else {
        d0 = (g[1] - g[0]) / h;
        d1 = (g[n - 1] - g[n - 2]) / h;
    }
    auto spline = std::make_shared<boost::math::interpolators::cardinal_cubic_b_spline<double>>(
        g.begin(), g.end(), profile.times.front(), h, d0, d1);
    const double t_last = profile.times.back();
    return evolve_ode(rho0, system, [spline, t_last](double t) { return (*spline)(std::min(t, t_last)); },
                      times, opt);
}

double coherence(const Eigen::Matrix4cd& rho) {
    double c = 0.0;
    for (int i = 0; i < 4; ++i)
        for (int k = 0; k < 4; ++k)
            if (i != k) c += std::abs(rho(i, k));
    return c;
}

double coherence(const BellDensityMatrix& rho) { return coherence(rho.rho); }

double magnetization_z(const BellDensityMatrix& rho) { return 2.0 * rho.rho(0, 2).real(); }

}  // namespace dpnm
