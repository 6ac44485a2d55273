#include "dpnm/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>
#include <string>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "dpnm/error.hpp"

namespace dpnm {

std::vector<double> panel_edges(double a, double b, double max_width,
                                const std::vector<double>& breakpoints) {
    if (!(b > a) || !(max_width > 0.0)) throw std::invalid_argument("invalid panel range");
    std::vector<double> knots{a, b};
    for (double p : breakpoints)
        if (p > a && p < b) knots.push_back(p);
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end(),
                            [&](double u, double v) { return v - u <= 1e-14 * (b - a); }),
                knots.end());
    knots.back() = b;

    std::vector<double> edges{knots.front()};
    for (std::size_t i = 1; i < knots.size(); ++i) {
        const double len = knots[i] - knots[i - 1];
        const auto n = static_cast<std::size_t>(std::ceil(len / max_width - 1e-12));
        const std::size_t parts = std::max<std::size_t>(n, 1);
        for (std::size_t j = 1; j < parts; ++j)
            edges.push_back(knots[i - 1] + len * static_cast<double>(j) / static_cast<double>(parts));
        edges.push_back(knots[i]);
    }
    return edges;
}

QuadratureRule composite_gauss_legendre(const std::vector<double>& edges) {
    using gl = boost::math::quadrature::gauss<double, 16>;
    const auto& xs = gl::abscissa();
    const auto& ws = gl::weights();
    QuadratureRule rule;
    rule.x.reserve(16 * edges.size());
    rule.w.reserve(16 * edges.size());
    for (std::size_t p = 1; p < edges.size(); ++p) {
        const double mid = 0.5 * (edges[p] + edges[p - 1]);
        const double half = 0.5 * (edges[p] - edges[p - 1]);
        for (std::size_t k = 0; k < xs.size(); ++k) {
            // abscissa list holds the non-negative half of a symmetric rule
            rule.x.push_back(mid - half * xs[k]);
            rule.w.push_back(half * ws[k]);
            if (xs[k] != 0.0) {
                rule.x.push_back(mid + half * xs[k]);
                rule.w.push_back(half * ws[k]);
            }
        }
    }
    return rule;
}

AdaptiveResult integrate_adaptive(const std::function<double(double)>& f,
                                  const std::vector<double>& edges, double rel_tol) {
    using gk = boost::math::quadrature::gauss_kronrod<double, 15>;
    struct Panel {
        double a, b, value, error, l1;
        bool operator<(const Panel& o) const { return error < o.error; }
    };
    auto eval = [&](double a, double b) {
        Panel p{a, b, 0.0, 0.0, 0.0};
        p.value = gk::integrate(f, a, b, 0, 0.0, &p.error, &p.l1);
        return p;
    };

    std::priority_queue<Panel> queue;
    std::vector<Panel> done;
    AdaptiveResult res;
    for (std::size_t i = 1; i < edges.size(); ++i) {
        if (!(edges[i] > edges[i - 1])) continue;
        Panel p = eval(edges[i - 1], edges[i]);
        res.error += p.error;
        res.l1 += p.l1;
        queue.push(p);
    }
    const double span = edges.empty() ? 0.0 : edges.back() - edges.front();
    const int max_splits = 200000;
    for (int split = 0; split < max_splits && !queue.empty() && res.error > rel_tol * res.l1; ++split) {
        const Panel p = queue.top();
        queue.pop();
        const double mid = 0.5 * (p.a + p.b);
        if (p.b - p.a < 1e-13 * span) {
            done.push_back(p);
            continue;
        }
        const Panel lo = eval(p.a, mid), hi = eval(mid, p.b);
        res.error += lo.error + hi.error - p.error;
        res.l1 += lo.l1 + hi.l1 - p.l1;
        queue.push(lo);
        queue.push(hi);
    }
    for (; !queue.empty(); queue.pop()) done.push_back(queue.top());
    std::sort(done.begin(), done.end(), [](const Panel& u, const Panel& v) { return u.a < v.a; });
    res.value = 0.0;
    res.error = 0.0;
    res.l1 = 0.0;
    for (const Panel& p : done) {
        res.value += p.value;
        res.error += p.error;
        res.l1 += p.l1;
    }
    if (!std::isfinite(res.value) || res.error > 10.0 * rel_tol * res.l1 + 1e-300)
        throw ConvergenceError("adaptive quadrature did not converge (error " + std::to_string(res.error) +
                               ", L1 " + std::to_string(res.l1) + ")");
    return res;
}

}  // namespace dpnm
