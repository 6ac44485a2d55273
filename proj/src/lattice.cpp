#include "dpnm/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <lapacke.h>

#include "dpnm/error.hpp"

namespace dpnm {

void ChainConfig::validate() const {
    if (n_bulk < 0 || n_bulk % 2 != 0)
        throw ConfigError("n_bulk must be a non-negative even integer, got " + std::to_string(n_bulk));
    if (!(m_bulk > 0.0) || !(m_defect > 0.0)) throw ConfigError("masses must be positive");
    if (!(k_bulk > 0.0) || !(k_defect > 0.0)) throw ConfigError("k_bulk and k_defect must be positive");
    if (!(k_interface >= 0.0)) throw ConfigError("k_interface must be non-negative");
    if (!(lattice_const > 0.0)) throw ConfigError("lattice_const must be positive");
}

bool DynamicalMatrix::is_tridiagonal() const {
    const Eigen::Index n = entries.rows();
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i)
            if (std::abs(i - j) > 1 && entries(i, j) != 0.0) return false;
    return true;
}

DynamicalMatrix build_dynamical_matrix(const ChainConfig& config) {
    config.validate();
    const int n = config.total_sites();
    const int d1 = config.defect_first();
    const int d2 = config.defect_second();

    DynamicalMatrix dm;
    dm.site_masses.assign(n, config.m_bulk);
    dm.site_masses[d1] = config.m_defect;
    dm.site_masses[d2] = config.m_defect;

    // bond b joins sites b-1 and b; b = 0 and b = n are the walls
    dm.site_springs.assign(n + 1, config.k_bulk);
    dm.site_springs[d1] = config.k_interface;
    dm.site_springs[d2] = config.k_defect;
    dm.site_springs[d2 + 1] = config.k_interface;
    if (config.boundary == Boundary::Free) {
        dm.site_springs[0] = 0.0;
        dm.site_springs[n] = 0.0;
    }

    const auto& k = dm.site_springs;
    const auto& m = dm.site_masses;
    dm.entries = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        dm.entries(i, i) = (k[i] + k[i + 1]) / m[i];
        if (i + 1 < n) {
            const double off = -k[i + 1] / std::sqrt(m[i] * m[i + 1]);
            dm.entries(i, i + 1) = off;
            dm.entries(i + 1, i) = off;
        }
    }
    return dm;
}

namespace {

void fix_signs(Eigen::MatrixXd& v) {
    for (Eigen::Index c = 0; c < v.cols(); ++c) {
        const double scale = v.col(c).cwiseAbs().maxCoeff();
        for (Eigen::Index r = 0; r < v.rows(); ++r) {
            if (std::abs(v(r, c)) > 1e-12 * scale) {
                if (v(r, c) < 0.0) v.col(c) = -v.col(c);
                break;
            }
        }
    }
}

void solve_tridiagonal(const Eigen::MatrixXd& a, Eigen::VectorXd& values, Eigen::MatrixXd& vectors) {
    const lapack_int n = static_cast<lapack_int>(a.rows());
    std::vector<double> d(n), e(std::max<lapack_int>(n, 1), 0.0);
    for (lapack_int i = 0; i < n; ++i) d[i] = a(i, i);
    for (lapack_int i = 0; i + 1 < n; ++i) e[i] = a(i + 1, i);
    values.resize(n);
    vectors.resize(n, n);
    std::vector<lapack_int> support(2 * static_cast<std::size_t>(n));
    lapack_int found = 0;
    const lapack_int info = LAPACKE_dstevr(LAPACK_COL_MAJOR, 'V', 'A', n, d.data(), e.data(), 0.0, 0.0,
                                           0, 0, 0.0, &found, values.data(), vectors.data(), n,
                                           support.data());
    if (info != 0 || found != n)
        throw ConvergenceError("tridiagonal eigensolver failed (info=" + std::to_string(info) + ")");
}

}  // namespace

PhononModes solve_modes(const DynamicalMatrix& dm) {
    const Eigen::MatrixXd& a = dm.entries;
    if (a.rows() != a.cols() || a.rows() == 0)
        throw std::invalid_argument("dynamical matrix must be square and non-empty");
    if ((a - a.transpose()).cwiseAbs().maxCoeff() != 0.0)
        throw std::invalid_argument("dynamical matrix must be symmetric");

    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
    if (dm.is_tridiagonal()) {
        solve_tridiagonal(a, values, vectors);
    } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
        if (es.info() != Eigen::Success) throw ConvergenceError("dense eigensolver failed");
        values = es.eigenvalues();
        vectors = es.eigenvectors();
    }

    const double top = std::max(values.maxCoeff(), 0.0);
    const double eps = 1e-9 * top;
    if (values.minCoeff() < -eps)
        throw ConvergenceError("dynamical matrix has a negative eigenvalue " + std::to_string(values.minCoeff()));

    fix_signs(vectors);
    PhononModes modes;
    modes.frequencies = values.cwiseMax(0.0).cwiseSqrt();
    modes.eigenvectors = std::move(vectors);
    modes.omega_max = modes.frequencies.maxCoeff();
    return modes;
}

Histogram density_of_states(const PhononModes& modes, int n_bins, double upper) {
    if (n_bins < 2) throw std::invalid_argument("n_bins must be >= 2");
    if (upper <= 0.0) upper = modes.omega_max;
    if (!(upper > 0.0)) throw std::invalid_argument("DOS upper bound must be positive");
    Histogram h;
    h.width = upper / n_bins;
    h.centers.resize(n_bins);
    h.counts.assign(n_bins, 0);
    for (int b = 0; b < n_bins; ++b) h.centers[b] = (b + 0.5) * h.width;
    for (Eigen::Index i = 0; i < modes.frequencies.size(); ++i) {
        const int b = static_cast<int>(std::floor(modes.frequencies[i] / h.width));
        ++h.counts[std::clamp(b, 0, n_bins - 1)];
    }
    return h;
}

double periodic_dispersion(double q, double k, double m, double a) {
    if (std::abs(q) > std::numbers::pi / a * (1.0 + 1e-12))
        throw std::domain_error("wavenumber outside the first Brillouin zone");
    return std::sqrt(4.0 * k / m) * std::abs(std::sin(0.5 * q * a));
}

}  // namespace dpnm
