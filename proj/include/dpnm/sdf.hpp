// sdf.hpp — numerical spectral density, phenomenological model and its fit

#pragma once

#include <array>
#include <functional>
#include <memory>
#include <vector>

#include "dpnm/coupling.hpp"
#include "dpnm/lattice.hpp"

namespace dpnm {

struct SampledSDF {
    std::vector<double> grid;    // uniform on [0, omega_max]
    std::vector<double> values;  // J(omega)
    double sigma{0.0};
    double hr_sum{0.0};          // sum |g|^2

    double spacing() const { return grid.size() > 1 ? grid[1] - grid[0] : 0.0; }
    double omega_max() const { return grid.empty() ? 0.0 : grid.back(); }
};

// J(w) = J0 sin^{1+n}(pi w / wmax) (G/2) / ((w - wl)^2 + (G/2)^2)
struct SdfParams {
    double j0{0.0};
    double gamma{0.0};
    double omega_loc{0.0};
    double n_exp{1.0};
    double omega_max{0.0};
    double goodness{0.0};   // R^2
    bool converged{false};
    int iterations{0};
};

SampledSDF numerical_sdf(const ModeCouplings& couplings, const PhononModes& modes, double sigma,
                         int n_grid);

// Trapezoidal integral of the samples.
double sdf_integral(const SampledSDF& sdf);

double eval_model(const SdfParams& params, double omega, double omega_max);

struct FitOptions {
    int max_iterations{500};
    double tolerance{1e-12};  // relative cost decrease and scaled step size
};

SdfParams fit_model(const SampledSDF& sdf, const FitOptions& options = {});

// Residuals and analytic Jacobian of the model in (j0, gamma, omega_loc, n_exp) at each omega.
void model_jacobian(const SdfParams& params, const std::vector<double>& omega,
                    std::vector<double>& value, std::vector<std::array<double, 4>>& jac);

// Evaluable J(omega) on (0, omega_max]; zero outside.
class SpectralFunction {
public:
    static SpectralFunction from_model(const SdfParams& params);
    static SpectralFunction from_samples(const SampledSDF& sdf);
    // feature_width sets the quadrature panel scale; breakpoints are forced panel edges
    static SpectralFunction from_callable(std::function<double(double)> j, double omega_max,
                                          double feature_width, std::vector<double> breakpoints = {});

    double operator()(double omega) const;
    double omega_max() const { return omega_max_; }
    double feature_width() const { return feature_width_; }
    const std::vector<double>& breakpoints() const { return breakpoints_; }

private:
    std::function<double(double)> j_;
    double omega_max_{0.0};
    double feature_width_{0.0};
    std::vector<double> breakpoints_;
};

}  // namespace dpnm
