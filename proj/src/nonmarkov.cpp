#include "dpnm/nonmarkov.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>

#include "dpnm/quadrature.hpp"
#include "dpnm/simd/kernels.hpp"

namespace dpnm {

double n_gamma_numeric(const RateProfile& profile) {
    const auto& t = profile.times;
    const auto& g = profile.gamma_c;
    double s = 0.0;
    for (std::size_t i = 1; i < t.size(); ++i) {
        const double a = 0.5 * (std::abs(g[i - 1]) - g[i - 1]);
        const double b = 0.5 * (std::abs(g[i]) - g[i]);
        s += 0.5 * (a + b) * (t[i] - t[i - 1]);
    }
    return s;
}

double decay_ratio(const SdfParams& params) {
    return std::numbers::pi * params.gamma / (2.0 * params.omega_loc);
}

double n_gamma_closed(const SdfParams& params, double temperature) {
    if (!(params.gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
    return upsilon_infinity(params, temperature) / std::expm1(decay_ratio(params));
}

CoherenceWeights CoherenceWeights::from_pair(double w1, double w2) {
    CoherenceWeights cw;
    cw.w(0, 2) = cw.w(2, 0) = w1;
    cw.w(0, 3) = cw.w(3, 0) = w1;
    cw.w(0, 1) = cw.w(1, 0) = w2;
    cw.w(1, 2) = cw.w(2, 1) = w2;
    cw.w(1, 3) = cw.w(3, 1) = w2;
    return cw;
}

CoherenceWeights compute_weights(const RateProfile& profile, const BellSystem& system) {
    using Spline = boost::math::interpolators::cardinal_cubic_b_spline<double>;
    const std::size_t n = profile.times.size();
    if (n < 4) throw std::invalid_argument("rate profile needs at least 4 samples");
    const double t0 = profile.times.front();
    const double h = (profile.times.back() - t0) / static_cast<double>(n - 1);
    for (std::size_t i = 1; i < n; ++i)
        if (std::abs(profile.times[i] - t0 - h * static_cast<double>(i)) > 1e-9 * (h * n))
            throw std::invalid_argument("rate profile must be uniformly sampled");

    const Spline gamma(profile.gamma_c.begin(), profile.gamma_c.end(), t0, h);
    const Spline ups(profile.upsilon.begin(), profile.upsilon.end(), t0, h);
    const double t_end = profile.times.back();
    auto g = [&](double t) { return gamma(std::clamp(t, t0, t_end)); };

    // sign changes of the interpolant between samples, bisected to 1e-8
    std::vector<double> roots{t0};
    for (std::size_t i = 1; i < n; ++i) {
        double a = profile.times[i - 1], b = profile.times[i];
        double fa = g(a), fb = g(b);
        if (fa == 0.0 || fb == 0.0 || (fa > 0.0) == (fb > 0.0)) continue;
        while (b - a > 1e-8) {
            const double m = 0.5 * (a + b);
            const double fm = g(m);
            if ((fm > 0.0) == (fa > 0.0)) {
                a = m;
                fa = fm;
            } else {
                b = m;
            }
        }
        roots.push_back(0.5 * (a + b));
    }
    roots.push_back(t_end);

    // spline knots as panel edges keep each panel polynomial-smooth
    auto knot_edges = [&](double a, double b) {
        std::vector<double> e{a};
        for (auto k = static_cast<std::size_t>(std::floor((a - t0) / h)) + 1; t0 + h * static_cast<double>(k) < b; ++k)
            e.push_back(t0 + h * static_cast<double>(k));
        e.push_back(b);
        return e;
    };

    std::vector<std::pair<double, double>> negative;
    for (std::size_t i = 1; i < roots.size(); ++i) {
        const double a = roots[i - 1], b = roots[i];
        if (b - a <= 0.0) continue;
        if (g(0.5 * (a + b)) < 0.0) negative.emplace_back(a, b);
    }

    CoherenceWeights cw;
    for (int i = 0; i < 4; ++i)
        for (int k = i + 1; k < 4; ++k) {
            const double xi = system.xi(i, k);
            if (xi == 0.0) continue;
            double acc = 0.0;
            auto f = [&](double t) { return std::min(g(t), 0.0) * std::exp(-xi * ups(t)); };
            for (const auto& [a, b] : negative) acc += integrate_adaptive(f, knot_edges(a, b), 1e-10).value;
            cw.w(i, k) = cw.w(k, i) = -2.0 * xi * acc;
        }

    const std::size_t tail = std::max<std::size_t>(n / 10, 2);
    const auto first = profile.upsilon.end() - static_cast<std::ptrdiff_t>(tail);
    const auto [lo, hi] = std::minmax_element(first, profile.upsilon.end());
    double mean = 0.0;
    for (auto it = first; it != profile.upsilon.end(); ++it) mean += *it;
    mean /= static_cast<double>(tail);
    cw.plateau_reached = (*hi - *lo) <= 0.01 * std::abs(mean);
    return cw;
}

double coherence_objective(const CoherenceWeights& weights, const Eigen::Vector4d& p) {
    double s = 0.0;
    for (int i = 0; i < 4; ++i)
        for (int k = i + 1; k < 4; ++k) s += std::sqrt(std::max(p[i] * p[k], 0.0)) * weights.w(i, k);
    return s;
}

namespace {

// G restricted to r3 = r4, in y = (r1, r2, sqrt2 r3) on the unit sphere: G = y^T B y
Eigen::Matrix3d reduced_form(const CoherenceWeights& cw) {
    const Eigen::Matrix4d& w = cw.w;
    const double s2 = std::sqrt(2.0);
    Eigen::Matrix3d b = Eigen::Matrix3d::Zero();
    b(0, 1) = b(1, 0) = 0.5 * w(0, 1);
    b(0, 2) = b(2, 0) = (w(0, 2) + w(0, 3)) / (2.0 * s2);
    b(1, 2) = b(2, 1) = (w(1, 2) + w(1, 3)) / (2.0 * s2);
    b(2, 2) = 0.5 * w(2, 3);
    return b;
}

Eigen::Vector4d populations_from(const Eigen::Vector3d& y) {
    Eigen::Vector4d p(y[0] * y[0], y[1] * y[1], 0.5 * y[2] * y[2], 0.5 * y[2] * y[2]);
    return p / p.sum();
}

}  // namespace

CoherenceOptimum maximize_coherence_nm(const CoherenceWeights& weights) {
    if ((weights.w.array() < 0.0).any()) throw std::invalid_argument("weights must be non-negative");
    CoherenceOptimum best;
    if (weights.w.cwiseAbs().maxCoeff() == 0.0) return best;

    const Eigen::Matrix3d b = reduced_form(weights);

    constexpr int grid = 64;
    std::vector<double> p1, p2, val(grid * grid);
    p1.reserve(grid * grid);
    p2.reserve(grid * grid);
    for (int i = 0; i < grid; ++i)
        for (int j = 0; j < grid; ++j) {
            p1.push_back(static_cast<double>(i) / (grid - 1));
            p2.push_back(static_cast<double>(j) / (grid - 1));
        }
    const simd::SimplexWeights sw{weights.w(0, 1), 0.5 * (weights.w(0, 2) + weights.w(0, 3)),
                                  0.5 * (weights.w(1, 2) + weights.w(1, 3)), weights.w(2, 3)};
    simd::kernels().simplex_objective(p1.data(), p2.data(), p1.size(), sw, val.data());
    const auto k = static_cast<std::size_t>(std::max_element(val.begin(), val.end()) - val.begin());

    Eigen::Vector3d y(std::sqrt(p1[k]), std::sqrt(p2[k]), std::sqrt(std::max(1.0 - p1[k] - p2[k], 0.0)));
    y.normalize();

    // steepest ascent on the sphere with exact line search (Rayleigh-Ritz in span{y, grad})
    double gnorm = 0.0;
    int it = 0;
    for (; it < 10000; ++it) {
        const Eigen::Vector3d by = b * y;
        const Eigen::Vector3d grad = 2.0 * (by - y.dot(by) * y);
        gnorm = grad.norm();
        if (gnorm < 1e-10) break;
        const Eigen::Vector3d d = grad / gnorm;
        Eigen::Matrix2d m;
        m << y.dot(by), y.dot(b * d), d.dot(by), d.dot(b * d);
        m(0, 1) = m(1, 0) = 0.5 * (m(0, 1) + m(1, 0));
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(m);
        Eigen::Vector2d c = es.eigenvectors().col(1);
        if (c[0] < 0.0) c = -c;
        Eigen::Vector3d next = (c[0] * y + c[1] * d).cwiseMax(0.0);
        if (next.norm() == 0.0) break;
        next.normalize();
        if ((next - y).norm() < 1e-15) {
            y = next;
            const Eigen::Vector3d by2 = b * y;
            gnorm = (2.0 * (by2 - y.dot(by2) * y)).norm();
            break;
        }
        y = next;
    }

    best.populations = populations_from(y);
    best.n_coherence = coherence_objective(weights, best.populations);
    best.gradient_norm = gnorm;
    best.iterations = it;
    return best;
}

CoherenceOptimum maximize_coherence_nm(double w1, double w2) {
    return maximize_coherence_nm(CoherenceWeights::from_pair(w1, w2));
}

double n_gamma_from_observables(double rho13_0, double m_z_infinity, const SdfParams& params,
                                const BellSystem& system) {
    if (!(rho13_0 > 0.0) || !(m_z_infinity > 0.0))
        throw std::domain_error("rho13(0) and M_z(inf) must be positive");
    if (m_z_infinity > 2.0 * rho13_0) throw std::domain_error("M_z(inf) exceeds 2 Re rho13(0)");
    const double xi13 = system.xi(0, 2);
    return std::log(2.0 * rho13_0 / m_z_infinity) / (xi13 * std::expm1(decay_ratio(params)));
}

NmReport nm_report(const RateProfile& profile, const SdfParams& params, const BellSystem& system) {
    NmReport r;
    r.temperature = profile.temperature;
    r.n_gamma_numeric = n_gamma_numeric(profile);
    r.n_gamma_closed = n_gamma_closed(params, profile.temperature);
    r.weights = compute_weights(profile, system);
    const CoherenceOptimum opt = maximize_coherence_nm(r.weights);
    r.n_coherence = opt.n_coherence;
    r.optimal_populations = opt.populations;
    return r;
}

}  // namespace dpnm
