// dynamics.hpp — canonical dephasing rate, accumulated dephasing and Bell-basis evolution

#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "dpnm/sdf.hpp"

namespace dpnm {

// coth(omega / 2T); exactly 1 at T = 0
double thermal_factor(double omega, double temperature);

struct RateOptions {
    double rel_tol{1e-10};
};

// 3 int J/w coth sin(wt) dw over (0, omega_max], adaptive
double canonical_rate(const SpectralFunction& j, double temperature, double t, const RateOptions& opt = {});

// 3 int J/w^2 coth (1 - cos wt) dw, adaptive
double upsilon(const SpectralFunction& j, double temperature, double t, const RateOptions& opt = {});

// 6 int J/w^2 coth dw
double upsilon_bound(const SpectralFunction& j, double temperature, const RateOptions& opt = {});

struct RateProfile {
    std::vector<double> times;
    std::vector<double> gamma_c;
    std::vector<double> upsilon;
    double temperature{0.0};

    std::size_t size() const { return times.size(); }
};

// Fixed composite Gauss-Legendre nodes on (0, omega_max], resolved for t <= t_max;
// batched rate and upsilon through the SIMD sin kernels.
class RateEngine {
public:
    RateEngine(const SpectralFunction& j, double temperature, double t_max);

    double rate(double t) const;
    double upsilon(double t) const;
    RateProfile profile(const std::vector<double>& times) const;
    std::size_t node_count() const { return omega_.size(); }

private:
    double temperature_;
    std::vector<double> omega_;
    std::vector<double> half_omega_;
    std::vector<double> rate_w_;
    std::vector<double> ups_w_;
};

// alpha coth(w_loc / 2T), alpha = 3 pi J0 sin^{1+n}(pi w_loc / w_max) / w_loc
double lambda_amplitude(const SdfParams& params, double temperature);

// Lambda sin(w_loc t) exp(-G t / 2)
double rate_approx(const SdfParams& params, double temperature, double t);

// Lambda w_loc / (w_loc^2 + G^2/4): limit of the integrated approximate rate
double upsilon_infinity(const SdfParams& params, double temperature);

double upsilon_approx(const SdfParams& params, double temperature, double t);

RateProfile approximate_profile(const SdfParams& params, double temperature,
                                const std::vector<double>& times);

// n + 1 points 0, dt, ..., with the last at t_end
std::vector<double> uniform_times(double t_end, std::size_t n_intervals);

struct BellSystem {
    double energy_scale{1.0};
    Eigen::Vector4d energies;
    Eigen::Vector4d dephasing;  // L
    Eigen::Matrix4d xi;         // (L_i - L_j)^2 / 2

    static BellSystem make(double energy_scale);
};

struct BellDensityMatrix {
    Eigen::Matrix4cd rho{Eigen::Matrix4cd::Zero()};

    static BellDensityMatrix from_amplitudes(const Eigen::Vector4cd& c);
    // throws std::invalid_argument when trace, Hermiticity or populations are off
    void validate(double tol = 1e-10) const;
};

BellDensityMatrix evolve_analytic(const BellDensityMatrix& rho0, const BellSystem& system, double upsilon_t);

struct OdeOptions {
    double rel_tol{1e-12};
    double abs_tol{1e-30};
};

// Rate taken from a cubic B-spline through a uniformly sampled profile.
std::vector<BellDensityMatrix> evolve_ode(const BellDensityMatrix& rho0, const BellSystem& system,
                                          const RateProfile& profile, const std::vector<double>& times,
                                          const OdeOptions& opt = {});

std::vector<BellDensityMatrix> evolve_ode(const BellDensityMatrix& rho0, const BellSystem& system,
                                          const std::function<double(double)>& rate,
                                          const std::vector<double>& times, const OdeOptions& opt = {});

double coherence(const Eigen::Matrix4cd& rho);
double coherence(const BellDensityMatrix& rho);

// Tr(rho M_z), M_z = |1><3| + |3><1|
double magnetization_z(const BellDensityMatrix& rho);

}  // namespace dpnm
