// lattice.hpp — 1D defect-phonon chain: dynamical matrix, normal modes, DOS

#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace dpnm {

enum class Boundary { Fixed, Free };

struct ChainConfig {
    int n_bulk{2022};          // N, even; sites excluding the defect pair
    double m_bulk{1.0};        // m
    double m_defect{2.0};      // M
    double k_bulk{1.0};        // k
    double k_defect{1.0};      // K
    double k_interface{0.1};   // k_I
    double lattice_const{1.0}; // a
    Boundary boundary{Boundary::Fixed};

    int total_sites() const { return n_bulk + 2; }
    // 0-based positions of the defect pair
    int defect_first() const { return n_bulk / 2; }
    int defect_second() const { return n_bulk / 2 + 1; }
    void validate() const;
};

struct DynamicalMatrix {
    Eigen::MatrixXd entries;          // (N+2)x(N+2), frequency^2
    std::vector<double> site_masses;  // M_n
    // spring between site i-1 and i; [0] and [N+2] are the wall springs (0 for FREE)
    std::vector<double> site_springs;

    bool is_tridiagonal() const;
};

struct PhononModes {
    Eigen::VectorXd frequencies;   // ascending
    Eigen::MatrixXd eigenvectors;  // column lambda is h_lambda
    double omega_max{0.0};

    std::size_t size() const { return static_cast<std::size_t>(frequencies.size()); }
};

DynamicalMatrix build_dynamical_matrix(const ChainConfig& config);

PhononModes solve_modes(const DynamicalMatrix& dm);

struct Histogram {
    std::vector<double> centers;
    std::vector<std::size_t> counts;
    double width{0.0};
};

// Equal-width bins on [0, upper]; upper defaults to modes.omega_max.
Histogram density_of_states(const PhononModes& modes, int n_bins, double upper = -1.0);

// sqrt(4k/m) |sin(qa/2)| for |q| <= pi/a
double periodic_dispersion(double q, double k, double m, double a);

}  // namespace dpnm
