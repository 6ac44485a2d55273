#include "dpnm/control.hpp"

#include <algorithm>
#include <memory>
#include <stdexcept>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/numeric/odeint.hpp>

#include "dpnm/error.hpp"

namespace dpnm {

namespace {

using cd = std::complex<double>;

Eigen::Matrix4cd ket_bra(int i, int j, cd v) {
    Eigen::Matrix4cd m = Eigen::Matrix4cd::Zero();
    m(i - 1, j - 1) = v;
    return m;
}

SpinOperatorSet build_operators() {
    const cd h(0.5, 0.0);
    const cd ih(0.0, 0.5);
    SpinOperatorSet s;
    s.s1x = h * (-ket_bra(1, 2, 1) - ket_bra(2, 1, 1) + ket_bra(3, 4, 1) + ket_bra(4, 3, 1));
    s.s2x = h * (ket_bra(1, 2, 1) + ket_bra(2, 1, 1) + ket_bra(3, 4, 1) + ket_bra(4, 3, 1));
    s.s1y = ih * (-ket_bra(1, 4, 1) + ket_bra(4, 1, 1) - ket_bra(2, 3, 1) + ket_bra(3, 2, 1));
    s.s2y = ih * (-ket_bra(1, 4, 1) + ket_bra(4, 1, 1) + ket_bra(2, 3, 1) - ket_bra(3, 2, 1));
    s.s1z = h * (ket_bra(1, 3, 1) + ket_bra(3, 1, 1) + ket_bra(2, 4, 1) + ket_bra(4, 2, 1));
    s.s2z = h * (ket_bra(1, 3, 1) + ket_bra(3, 1, 1) - ket_bra(2, 4, 1) - ket_bra(4, 2, 1));
    return s;
}

}  // namespace

const SpinOperatorSet& bell_spin_operators() {
    static const SpinOperatorSet ops = build_operators();
    return ops;
}

ControlField ControlField::constant(const Eigen::Vector3d& b) {
    ControlField f;
    f.b_ = [b](double) { return b; };
    return f;
}

ControlField ControlField::from_callable(std::function<Eigen::Vector3d(double)> b) {
    ControlField f;
    f.b_ = std::move(b);
    return f;
}

ControlField ControlField::from_samples(double t0, double dt, const std::vector<Eigen::Vector3d>& samples) {
    using Spline = boost::math::interpolators::cardinal_cubic_b_spline<double>;
    if (samples.size() < 4 || !(dt > 0.0)) throw std::invalid_argument("need >= 4 field samples and dt > 0");
    std::array<std::shared_ptr<Spline>, 3> comp;
    for (int a = 0; a < 3; ++a) {
        std::vector<double> v;
        for (const auto& s : samples) v.push_back(s[a]);
        comp[a] = std::make_shared<Spline>(v.begin(), v.end(), t0, dt);
    }
    const double t1 = t0 + dt * static_cast<double>(samples.size() - 1);
    ControlField f;
    f.b_ = [comp, t0, t1](double t) {
        const double u = std::clamp(t, t0, t1);
        return Eigen::Vector3d((*comp[0])(u), (*comp[1])(u), (*comp[2])(u));
    };
    return f;
}

Eigen::Matrix4cd hamiltonian_global(const Eigen::Vector3d& b, const Eigen::Vector4d& energies) {
    const auto& s = bell_spin_operators();
    Eigen::Matrix4cd h = energies.cast<cd>().asDiagonal();
    h += b[0] * (s.s1x + s.s2x) + b[1] * (s.s1y + s.s2y) + b[2] * (s.s1z + s.s2z);
    return h;
}

Eigen::Matrix4cd hamiltonian_local(const Eigen::Vector3d& b, const Eigen::Vector4d& energies) {
    const auto& s = bell_spin_operators();
    Eigen::Matrix4cd h = energies.cast<cd>().asDiagonal();
    h += b[0] * s.s1x + b[1] * s.s1y + b[2] * s.s1z;
    return h;
}

std::vector<AmplitudeState> evolve_schrodinger(const AmplitudeState& c0, const ControlField& field,
                                               const Eigen::Vector4d& energies,
                                               const std::vector<double>& times, FieldMode mode,
                                               const OdeOptions& opt) {
    namespace odeint = boost::numeric::odeint;
    using State = std::array<double, 8>;
    if (times.empty()) return {};
    if (std::abs(c0.c.norm() - 1.0) > 1e-8) throw std::invalid_argument("initial amplitudes must be normalized");

    auto rhs = [&](const State& x, State& dx, double t) {
        const Eigen::Vector3d b = field(t);
        const Eigen::Matrix4cd h = mode == FieldMode::Local ? hamiltonian_local(b, energies)
                                                            : hamiltonian_global(b, energies);
        const Eigen::Matrix4d hr = h.real();
        const Eigen::Matrix4d hi = h.imag();
        const Eigen::Map<const Eigen::Vector4d> cr(x.data());
        const Eigen::Map<const Eigen::Vector4d> ci(x.data() + 4);
        Eigen::Map<Eigen::Vector4d> dr(dx.data());
        Eigen::Map<Eigen::Vector4d> di(dx.data() + 4);
        // -i (Hr + i Hi)(cr + i ci)
        dr = hi * cr + hr * ci;
        di = hi * ci - hr * cr;
    };

    State x{};
    for (int j = 0; j < 4; ++j) {
        x[j] = c0.c[j].real();
        x[4 + j] = c0.c[j].imag();
    }
    std::vector<AmplitudeState> out;
    out.reserve(times.size());
    auto observer = [&](const State& s, double) {
        AmplitudeState a;
        for (int j = 0; j < 4; ++j) a.c[j] = {s[j], s[4 + j]};
        out.push_back(a);
    };
    auto stepper = odeint::make_controlled(opt.abs_tol, opt.rel_tol, odeint::runge_kutta_dopri5<State>());
    const double span = times.back() - times.front();
    try {
        odeint::integrate_times(stepper, rhs, x, times.begin(), times.end(), span > 0.0 ? span * 1e-4 : 1e-3,
                                observer, odeint::max_step_checker(100000));
    } catch (const odeint::step_adjustment_error& e) {
        throw ConvergenceError(std::string("Schrodinger step failure: ") + e.what());
    } catch (const odeint::no_progress_error& e) {
        throw ConvergenceError(std::string("Schrodinger integration stalled: ") + e.what());
    }
    return out;
}

std::array<Eigen::Matrix4cd, 6> coherence_observables() {
    const auto& s = bell_spin_operators();
    const Eigen::Matrix4cd xp = s.s2x + s.s1x, xm = s.s2x - s.s1x;
    const Eigen::Matrix4cd yp = s.s2y + s.s1y, ym = s.s2y - s.s1y;
    const Eigen::Matrix4cd zp = s.s2z + s.s1z, zm = s.s2z - s.s1z;
    return {zm * yp, xm * ym, zm * xm, zp * xm, xp * ym, zm * ym};
}

double coherence_from_observables(const Eigen::Matrix4cd& rho) {
    static const std::array<Eigen::Matrix4cd, 6> ops = coherence_observables();
    double c = 0.0;
    for (const auto& o : ops) c += std::abs((rho * o).trace());
    return 2.0 * c;
}

double coherence_from_observables(const BellDensityMatrix& rho) { return coherence_from_observables(rho.rho); }

}  // namespace dpnm
