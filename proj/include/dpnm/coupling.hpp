// coupling.hpp — defect mode projections and spin-phonon coupling constants

#pragma once

#include <Eigen/Dense>

#include "dpnm/lattice.hpp"

namespace dpnm {

struct CouplingParams {
    double dipolar_strength{1.0};  // C
    double m_defect{2.0};          // M
    double lattice_const{1.0};     // a
    double omega_cut{-1.0};        // negative: 1e-6 * omega_max

    double energy_scale() const;   // E = C / a^3
    void validate() const;
};

struct DefectVectors {
    Eigen::VectorXd sym;   // (..,1,1,..)/sqrt2
    Eigen::VectorXd asym;  // (..,-1,1,..)/sqrt2
};

struct ModeCouplings {
    Eigen::VectorXd projections_sym;
    Eigen::VectorXd projections_asym;
    Eigen::VectorXd g;
    double omega_cut{0.0};
    double coupling_ratio{0.0};  // max|g| / E
    bool weak_coupling{true};    // coupling_ratio <= weak_coupling_limit
};

inline constexpr double weak_coupling_limit = 0.1;

DefectVectors defect_local_vectors(int total_sites, int first, int second);

Eigen::VectorXd project_modes(const PhononModes& modes, const Eigen::VectorXd& h_defect);

// Defect pair taken at the chain centre, positions n/2-1 and n/2 for n sites.
ModeCouplings spin_phonon_couplings(const PhononModes& modes, const CouplingParams& params);

}  // namespace dpnm
