// pipeline.hpp — run configuration and stage orchestration for the batch CLI

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "dpnm/control.hpp"
#include "dpnm/coupling.hpp"
#include "dpnm/lattice.hpp"
#include "dpnm/nonmarkov.hpp"
#include "dpnm/sdf.hpp"

namespace dpnm {

enum class Stage { Modes, Sdf, Fit, Rate, Evolve, NmGamma, NmCoherence, Control, All };

Stage parse_stage(std::string_view name);
std::string_view stage_name(Stage stage);

enum class BathKind { Model, Sampled };

struct SdfConfig {
    double sigma_rel{0.01};  // sigma / omega_max
    int n_grid{2048};
    int max_iterations{500};
};

struct DynamicsConfig {
    std::vector<double> temperatures_rel{0.0, 1.0};  // T / omega_max
    double horizon_factor{20.0};                     // t_end = horizon_factor / Gamma
    int samples_per_period{80};                      // per 2 pi / omega_loc
    BathKind bath{BathKind::Model};
    bool optimal_initial_state{true};
    Eigen::Vector4d initial_populations{Eigen::Vector4d::Constant(0.25)};
    bool ode_check{true};
};

struct NonmarkovConfig {
    double horizon_factor{20.0};
    std::vector<double> k_interface_sweep{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    std::vector<double> temperature_sweep_rel{0.0, 0.5, 1.0, 1.5, 2.0};
};

struct ControlConfig {
    FieldMode mode{FieldMode::Local};
    Eigen::Vector3d field{0.3, 0.2, 0.1};
    double t_end{50.0};
    int n_samples{501};
    Eigen::Vector4d initial_amplitudes{1.0, 0.0, 0.0, 0.0};  // real, normalized on load
};

struct OutputConfig {
    std::string directory{"out"};
    int precision{17};
    int dos_bins{100};
};

struct RunConfig {
    ChainConfig chain;
    double dipolar_strength{1.0};
    double omega_cut_rel{1e-6};
    SdfConfig sdf;
    DynamicsConfig dynamics;
    NonmarkovConfig nonmarkov;
    ControlConfig control;
    OutputConfig output;

    CouplingParams coupling_params(double omega_max) const;
    void validate() const;
};

RunConfig config_from_json_text(const std::string& text);
RunConfig load_config(const std::string& path);
// resolved configuration, keys sorted
std::string config_to_json(const RunConfig& config);

struct RunOptions {
    std::string out_dir;      // overrides output.directory when non-empty
    std::string stage_cache;  // directory for reusable bath artifacts; empty disables
    int threads{1};
    long seed{0};             // reserved; the pipeline is deterministic
};

struct RunResult {
    std::vector<std::string> files;  // written, relative to the output directory
    std::vector<std::string> warnings;
};

// Everything derived from the chain for one k_I: modes, couplings, numerical SDF, fit.
struct Bath {
    ChainConfig chain;
    PhononModes modes;
    ModeCouplings couplings;
    SampledSDF sdf;
    SdfParams fit;
    bool has_modes{false};
};

Bath compute_bath(const RunConfig& config, double k_interface, const std::string& cache_dir = {},
                  bool need_modes = false);

RunResult run_pipeline(const RunConfig& config, Stage stage, const RunOptions& options = {});

}  // namespace dpnm
