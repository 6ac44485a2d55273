// control.hpp — closed-system control of the defect: spin operators, field Hamiltonians,
// Schrodinger propagation and observable-based coherence

#pragma once

#include <array>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "dpnm/dynamics.hpp"

namespace dpnm {

struct SpinOperatorSet {
    Eigen::Matrix4cd s1x, s2x, s1y, s2y, s1z, s2z;
};

const SpinOperatorSet& bell_spin_operators();

enum class FieldMode { Local, Global };

// B(t) -> (Bx, By, Bz), gyromagnetic factor absorbed
class ControlField {
public:
    static ControlField constant(const Eigen::Vector3d& b);
    static ControlField from_callable(std::function<Eigen::Vector3d(double)> b);
    // cubic B-spline through uniform samples starting at t0 with spacing dt
    static ControlField from_samples(double t0, double dt, const std::vector<Eigen::Vector3d>& samples);

    Eigen::Vector3d operator()(double t) const { return b_(t); }

private:
    std::function<Eigen::Vector3d(double)> b_;
};

Eigen::Matrix4cd hamiltonian_global(const Eigen::Vector3d& b, const Eigen::Vector4d& energies);
Eigen::Matrix4cd hamiltonian_local(const Eigen::Vector3d& b, const Eigen::Vector4d& energies);

struct AmplitudeState {
    Eigen::Vector4cd c{Eigen::Vector4cd::Zero()};
};

// dc/dt = -i H(t) c on the split (Re, Im) representation
std::vector<AmplitudeState> evolve_schrodinger(const AmplitudeState& c0, const ControlField& field,
                                               const Eigen::Vector4d& energies,
                                               const std::vector<double>& times, FieldMode mode,
                                               const OdeOptions& opt = {});

// the six bilinear observables O_1..O_6
std::array<Eigen::Matrix4cd, 6> coherence_observables();

// 2 sum_i |Tr(rho O_i)|
double coherence_from_observables(const Eigen::Matrix4cd& rho);
double coherence_from_observables(const BellDensityMatrix& rho);

}  // namespace dpnm
