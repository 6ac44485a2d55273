// quadrature.hpp — composite Gauss-Legendre nodes and adaptive Gauss-Kronrod wrapper

#pragma once

#include <functional>
#include <vector>

namespace dpnm {

struct QuadratureRule {
    std::vector<double> x;
    std::vector<double> w;
};

// Sorted, de-duplicated edges of [a, b] including interior breakpoints; every gap split
// into equal panels no wider than max_width.
std::vector<double> panel_edges(double a, double b, double max_width,
                                const std::vector<double>& breakpoints = {});

// 16-point Gauss-Legendre on each panel.
QuadratureRule composite_gauss_legendre(const std::vector<double>& edges);

struct AdaptiveResult {
    double value{0.0};
    double error{0.0};
    double l1{0.0};
};

// Globally adaptive G7K15: bisects the panel with the largest error estimate until the
// summed estimate is below rel_tol * L1; throws ConvergenceError above 10 * rel_tol * L1.
AdaptiveResult integrate_adaptive(const std::function<double(double)>& f,
                                  const std::vector<double>& edges, double rel_tol);

}  // namespace dpnm
