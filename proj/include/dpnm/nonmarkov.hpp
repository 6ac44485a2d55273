// nonmarkov.hpp — rate-based and coherence-based non-Markovianity measures

#pragma once

#include <Eigen/Dense>

#include "dpnm/dynamics.hpp"

namespace dpnm {

// 1/2 int (|gamma| - gamma) dt, trapezoidal on the samples
double n_gamma_numeric(const RateProfile& profile);

// Lambda(T) w_loc / (w_loc^2 + G^2/4) / (exp(pi G / 2 w_loc) - 1)
double n_gamma_closed(const SdfParams& params, double temperature);

// pi G / (2 w_loc)
double decay_ratio(const SdfParams& params);

struct CoherenceWeights {
    Eigen::Matrix4d w{Eigen::Matrix4d::Zero()};  // symmetric, zero diagonal
    bool plateau_reached{true};

    double w12() const { return w(0, 1); }
    double w13() const { return w(0, 2); }
    double w23() const { return w(1, 2); }

    // W1 -> W13 = W14, W2 -> W12 = W23 = W24, W34 = 0
    static CoherenceWeights from_pair(double w1, double w2);
};

CoherenceWeights compute_weights(const RateProfile& profile, const BellSystem& system);

// sum_{i<j} sqrt(p_i p_j) W_ij
double coherence_objective(const CoherenceWeights& weights, const Eigen::Vector4d& p);

struct CoherenceOptimum {
    double n_coherence{0.0};
    Eigen::Vector4d populations{Eigen::Vector4d::Constant(0.25)};
    double gradient_norm{0.0};
    int iterations{0};
};

CoherenceOptimum maximize_coherence_nm(const CoherenceWeights& weights);
CoherenceOptimum maximize_coherence_nm(double w1, double w2);

// ln(2 rho13 / M_inf) / (xi13 (exp(pi G / 2 w_loc) - 1))
double n_gamma_from_observables(double rho13_0, double m_z_infinity, const SdfParams& params,
                                const BellSystem& system);

struct NmReport {
    double n_gamma_numeric{0.0};
    double n_gamma_closed{0.0};
    double n_coherence{0.0};
    Eigen::Vector4d optimal_populations{Eigen::Vector4d::Constant(0.25)};
    CoherenceWeights weights;
    double temperature{0.0};
};

NmReport nm_report(const RateProfile& profile, const SdfParams& params, const BellSystem& system);

}  // namespace dpnm
