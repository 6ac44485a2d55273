// fit.cpp — bounded Levenberg-Marquardt fit of the phenomenological SDF

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>

#include "dpnm/sdf.hpp"

namespace dpnm {

void model_jacobian(const SdfParams& p, const std::vector<double>& omega, std::vector<double>& value,
                    std::vector<std::array<double, 4>>& jac) {
    value.assign(omega.size(), 0.0);
    jac.assign(omega.size(), {0.0, 0.0, 0.0, 0.0});
    const double hg = 0.5 * p.gamma;
    for (std::size_t i = 0; i < omega.size(); ++i) {
        const double w = omega[i];
        if (w <= 0.0 || w >= p.omega_max) continue;
        const double s = std::sin(std::numbers::pi * w / p.omega_max);
        if (s <= 0.0) continue;
        const double d = w - p.omega_loc;
        const double den = d * d + hg * hg;
        const double env = std::pow(s, 1.0 + p.n_exp);
        const double lor = hg / den;
        const double f = p.j0 * env * lor;
        value[i] = f;
        jac[i][0] = env * lor;
        jac[i][1] = p.j0 * env * (0.5 * d * d - 0.5 * hg * hg) / (den * den);
        jac[i][2] = p.j0 * env * 2.0 * hg * d / (den * den);
        jac[i][3] = f * std::log(s);
    }
}

namespace {

struct Problem {
    const std::vector<double>& x;
    std::vector<double> y;  // normalized
    double omega_max;
    std::array<double, 4> lo, hi;

    double cost(const SdfParams& p, std::vector<double>& r) const {
        r.resize(x.size());
        double c = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            r[i] = eval_model(p, x[i], omega_max) - y[i];
            c += r[i] * r[i];
        }
        return 0.5 * c;
    }
};

std::array<double, 4> to_vec(const SdfParams& p) { return {p.j0, p.gamma, p.omega_loc, p.n_exp}; }

void from_vec(SdfParams& p, const std::array<double, 4>& v) {
    p.j0 = v[0];
    p.gamma = v[1];
    p.omega_loc = v[2];
    p.n_exp = v[3];
}

SdfParams initial_guess(const std::vector<double>& x, const std::vector<double>& y, double omega_max) {
    const auto it = std::max_element(y.begin(), y.end());
    const std::size_t ip = static_cast<std::size_t>(it - y.begin());
    const double peak = *it;
    const double half = 0.5 * peak;

    auto crossing = [&](int dir) -> double {
        std::ptrdiff_t i = static_cast<std::ptrdiff_t>(ip);
        while (true) {
            const std::ptrdiff_t j = i + dir;
            if (j < 0 || j >= static_cast<std::ptrdiff_t>(y.size())) return std::numeric_limits<double>::quiet_NaN();
            if (y[j] < half) {
                const double t = (y[i] - half) / (y[i] - y[j]);
                return x[i] + t * (x[j] - x[i]);
            }
            i = j;
        }
    };
    const double left = crossing(-1);
    const double right = crossing(+1);
    double fwhm;
    if (std::isfinite(left) && std::isfinite(right)) fwhm = right - left;
    else if (std::isfinite(left)) fwhm = 2.0 * (x[ip] - left);
    else if (std::isfinite(right)) fwhm = 2.0 * (right - x[ip]);
    else fwhm = 0.1 * omega_max;

    SdfParams p;
    p.omega_max = omega_max;
    p.omega_loc = std::clamp(x[ip], 1e-6 * omega_max, (1.0 - 1e-6) * omega_max);
    p.gamma = std::clamp(fwhm, 1e-6 * omega_max, omega_max);
    p.n_exp = 1.0;
    const double s = std::sin(std::numbers::pi * p.omega_loc / omega_max);
    p.j0 = peak * 0.5 * p.gamma / std::max(s * s, 1e-300);
    return p;
}

}  // namespace

SdfParams fit_model(const SampledSDF& sdf, const FitOptions& options) {
    if (sdf.grid.size() != sdf.values.size() || sdf.grid.size() < 8)
        throw std::invalid_argument("SDF must have matching grid and values (>= 8 samples)");
    const double ymax = *std::max_element(sdf.values.begin(), sdf.values.end());
    if (!(ymax > 0.0)) throw std::invalid_argument("SDF must have a strictly positive maximum");
    const double wmax = sdf.omega_max();

    Problem prob{sdf.grid, {}, wmax, {}, {}};
    prob.y.resize(sdf.values.size());
    for (std::size_t i = 0; i < sdf.values.size(); ++i) prob.y[i] = sdf.values[i] / ymax;
    prob.lo = {1e-300, 1e-9 * wmax, 1e-9 * wmax, 1.0};
    prob.hi = {std::numeric_limits<double>::infinity(), wmax, (1.0 - 1e-9) * wmax, 20.0};

    SdfParams p = initial_guess(sdf.grid, prob.y, wmax);
    std::array<double, 4> v = to_vec(p);
    for (int k = 0; k < 4; ++k) v[k] = std::clamp(v[k], prob.lo[k], prob.hi[k]);
    from_vec(p, v);

    std::vector<double> r, fval, rtrial;
    std::vector<std::array<double, 4>> jac;
    double cost = prob.cost(p, r);
    double mu = -1.0;
    double nu = 2.0;
    Eigen::Vector4d scale = Eigen::Vector4d::Zero();
    bool converged = false;
    int iter = 0;

    for (; iter < options.max_iterations && !converged; ++iter) {
        model_jacobian(p, sdf.grid, fval, jac);
        Eigen::Matrix4d a = Eigen::Matrix4d::Zero();
        Eigen::Vector4d g = Eigen::Vector4d::Zero();
        for (std::size_t i = 0; i < r.size(); ++i) {
            const Eigen::Map<const Eigen::Vector4d> ji(jac[i].data());
            a.noalias() += ji * ji.transpose();
            g += ji * r[i];
        }
        for (int k = 0; k < 4; ++k) scale[k] = std::max(scale[k], a(k, k));
        if (mu < 0.0) mu = 1e-3 * scale.maxCoeff();

        // freeze parameters pinned at a bound with the gradient pushing outward
        std::array<bool, 4> active{};
        for (int k = 0; k < 4; ++k)
            active[k] = (v[k] <= prob.lo[k] && g[k] > 0.0) || (v[k] >= prob.hi[k] && g[k] < 0.0) ||
                        scale[k] == 0.0;
        double gnorm = 0.0;
        for (int k = 0; k < 4; ++k)
            if (!active[k]) gnorm = std::max(gnorm, std::abs(g[k]) * std::max(std::abs(v[k]), 1e-12));
        if (gnorm <= options.tolerance * std::max(cost, 1e-300) * 1e-3) {
            converged = true;
            break;
        }

        bool accepted = false;
        while (!accepted) {
            Eigen::Matrix4d m = a;
            Eigen::Vector4d rhs = -g;
            for (int k = 0; k < 4; ++k) {
                m(k, k) += mu * scale[k];
                if (active[k]) {
                    m.row(k).setZero();
                    m.col(k).setZero();
                    m(k, k) = 1.0;
                    rhs[k] = 0.0;
                }
            }
            const Eigen::Vector4d step = m.ldlt().solve(rhs);
            std::array<double, 4> vt{};
            for (int k = 0; k < 4; ++k) vt[k] = std::clamp(v[k] + step[k], prob.lo[k], prob.hi[k]);
            SdfParams pt = p;
            from_vec(pt, vt);
            const double ct = prob.cost(pt, rtrial);
            const double predicted = -(step.dot(g) + 0.5 * step.dot(a * step));

            double rel_step = 0.0;
            for (int k = 0; k < 4; ++k)
                rel_step = std::max(rel_step, std::abs(vt[k] - v[k]) / (std::abs(v[k]) + 1e-12));

            if (ct < cost) {
                const double rho = predicted > 0.0 ? (cost - ct) / predicted : 0.0;
                const bool small_gain = cost - ct <= options.tolerance * cost;
                v = vt;
                p = pt;
                r.swap(rtrial);
                cost = ct;
                mu *= std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * rho - 1.0, 3));
                nu = 2.0;
                accepted = true;
                if ((small_gain && rel_step < 1e-6) || rel_step < options.tolerance) converged = true;
            } else {
                mu *= nu;
                nu *= 2.0;
                if (rel_step < options.tolerance || !std::isfinite(mu) || mu > 1e300) {
                    converged = true;
                    break;
                }
            }
        }
    }

    double ss_res = 0.0, ss_tot = 0.0, mean = 0.0;
    for (double y : sdf.values) mean += y;
    mean /= static_cast<double>(sdf.values.size());
    SdfParams out = p;
    out.j0 = p.j0 * ymax;
    for (std::size_t i = 0; i < sdf.values.size(); ++i) {
        const double e = eval_model(out, sdf.grid[i], wmax) - sdf.values[i];
        ss_res += e * e;
        ss_tot += (sdf.values[i] - mean) * (sdf.values[i] - mean);
    }
    out.goodness = ss_tot > 0.0 ? std::max(0.0, 1.0 - ss_res / ss_tot) : 0.0;
    out.converged = converged;
    out.iterations = iter;
    return out;
}

}  // namespace dpnm
