#include "dpnm/sdf.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "dpnm/simd/kernels.hpp"

namespace dpnm {

SampledSDF numerical_sdf(const ModeCouplings& couplings, const PhononModes& modes, double sigma,
                         int n_grid) {
    if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
    if (n_grid < 64) throw std::invalid_argument("n_grid must be >= 64");
    if (couplings.g.size() != modes.frequencies.size())
        throw std::invalid_argument("coupling and mode counts differ");

    SampledSDF sdf;
    sdf.sigma = sigma;
    sdf.grid.resize(n_grid);
    const double h = modes.omega_max / (n_grid - 1);
    for (int i = 0; i < n_grid; ++i) sdf.grid[i] = h * i;
    sdf.grid.back() = modes.omega_max;

    std::vector<double> centers, weights;
    for (Eigen::Index l = 0; l < couplings.g.size(); ++l) {
        const double g2 = couplings.g[l] * couplings.g[l];
        sdf.hr_sum += g2;
        if (g2 == 0.0) continue;
        centers.push_back(modes.frequencies[l]);
        weights.push_back(g2 / (std::sqrt(std::numbers::pi) * sigma));
    }
    sdf.values.assign(n_grid, 0.0);
    simd::kernels().gaussian_smear(sdf.grid.data(), sdf.grid.size(), centers.data(), weights.data(),
                                   centers.size(), 1.0 / sigma, sdf.values.data());
    return sdf;
}

double sdf_integral(const SampledSDF& sdf) {
    double s = 0.0;
    for (std::size_t i = 1; i < sdf.grid.size(); ++i)
        s += 0.5 * (sdf.values[i] + sdf.values[i - 1]) * (sdf.grid[i] - sdf.grid[i - 1]);
    return s;
}

double eval_model(const SdfParams& p, double omega, double omega_max) {
    if (omega <= 0.0 || omega >= omega_max) return 0.0;
    const double s = std::sin(std::numbers::pi * omega / omega_max);
    const double d = omega - p.omega_loc;
    const double hg = 0.5 * p.gamma;
    return p.j0 * std::pow(s, 1.0 + p.n_exp) * hg / (d * d + hg * hg);
}

SpectralFunction SpectralFunction::from_model(const SdfParams& params) {
    SpectralFunction f;
    f.omega_max_ = params.omega_max;
    f.j_ = [params](double w) { return eval_model(params, w, params.omega_max); };
    f.feature_width_ = std::min(params.gamma, params.omega_max / 16.0);
    for (double k : {-4.0, -1.0, 0.0, 1.0, 4.0}) f.breakpoints_.push_back(params.omega_loc + k * params.gamma);
    return f;
}

SpectralFunction SpectralFunction::from_callable(std::function<double(double)> j, double omega_max,
                                                 double feature_width,
                                                 std::vector<double> breakpoints) {
    if (!(omega_max > 0.0) || !(feature_width > 0.0))
        throw std::invalid_argument("omega_max and feature_width must be positive");
    SpectralFunction f;
    f.j_ = std::move(j);
    f.omega_max_ = omega_max;
    f.feature_width_ = feature_width;
    f.breakpoints_ = std::move(breakpoints);
    return f;
}

double SpectralFunction::operator()(double omega) const {
    if (omega <= 0.0 || omega > omega_max_) return 0.0;
    return j_(omega);
}

}  // namespace dpnm
