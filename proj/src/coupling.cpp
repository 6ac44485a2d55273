#include "dpnm/coupling.hpp"

#include <cmath>
#include <stdexcept>

#include "dpnm/error.hpp"

namespace dpnm {

double CouplingParams::energy_scale() const {
    return dipolar_strength / (lattice_const * lattice_const * lattice_const);
}

void CouplingParams::validate() const {
    if (!(dipolar_strength > 0.0)) throw ConfigError("dipolar_strength must be positive");
    if (!(m_defect > 0.0)) throw ConfigError("m_defect must be positive");
    if (!(lattice_const > 0.0)) throw ConfigError("lattice_const must be positive");
}

DefectVectors defect_local_vectors(int total_sites, int first, int second) {
    if (second != first + 1) throw std::invalid_argument("defect positions must be adjacent");
    if (first < 0 || second >= total_sites) throw std::out_of_range("defect positions out of range");
    const double s = 1.0 / std::sqrt(2.0);
    DefectVectors v;
    v.sym = Eigen::VectorXd::Zero(total_sites);
    v.asym = Eigen::VectorXd::Zero(total_sites);
    v.sym[first] = s;
    v.sym[second] = s;
    v.asym[first] = -s;
    v.asym[second] = s;
    return v;
}

Eigen::VectorXd project_modes(const PhononModes& modes, const Eigen::VectorXd& h_defect) {
    if (modes.eigenvectors.rows() != h_defect.size())
        throw std::invalid_argument("defect vector length does not match the mode dimension");
    return modes.eigenvectors.transpose() * h_defect;
}

ModeCouplings spin_phonon_couplings(const PhononModes& modes, const CouplingParams& params) {
    params.validate();
    const int n = static_cast<int>(modes.eigenvectors.rows());
    if (n < 2 || n % 2 != 0) throw std::invalid_argument("mode set must have an even site count >= 2");
    const DefectVectors h = defect_local_vectors(n, n / 2 - 1, n / 2);

    ModeCouplings mc;
    mc.projections_sym = project_modes(modes, h.sym);
    mc.projections_asym = project_modes(modes, h.asym);
    mc.omega_cut = params.omega_cut >= 0.0 ? params.omega_cut : 1e-6 * modes.omega_max;

    const double a4 = std::pow(params.lattice_const, 4);
    const double c = 3.0 * params.dipolar_strength / a4;
    mc.g = Eigen::VectorXd::Zero(modes.frequencies.size());
    for (Eigen::Index l = 0; l < mc.g.size(); ++l) {
        const double w = modes.frequencies[l];
        if (w < mc.omega_cut || w <= 0.0) continue;
        mc.g[l] = c * mc.projections_asym[l] / std::sqrt(2.0 * params.m_defect * w);
    }
    const double gmax = mc.g.size() > 0 ? mc.g.cwiseAbs().maxCoeff() : 0.0;
    mc.coupling_ratio = gmax / params.energy_scale();
    mc.weak_coupling = mc.coupling_ratio <= weak_coupling_limit;
    return mc;
}

}  // namespace dpnm
