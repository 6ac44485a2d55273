// dpnm — batch driver for the defect-phonon non-Markovianity pipeline

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "dpnm/error.hpp"
#include "dpnm/pipeline.hpp"

namespace {

enum Exit { kOk = 0, kUsage = 1, kConfig = 2, kIo = 3, kConvergence = 4 };

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Defect-phonon chain: modes, spectral density, dephasing dynamics and non-Markovianity"};
    app.require_subcommand(1, 1);

    std::string config_path;
    dpnm::RunOptions options;
    app.add_option("--config", config_path, "JSON configuration file (defaults apply when omitted)");
    app.add_option("--out", options.out_dir, "output directory (overrides output.directory)");
    app.add_option("--stage-cache", options.stage_cache, "directory for reusable bath artifacts");
    app.add_option("--threads", options.threads, "worker threads for sweeps")->check(CLI::PositiveNumber);
    app.add_option("--seed", options.seed, "reserved; results are deterministic");

    const char* stages[] = {"modes", "sdf", "fit", "rate", "evolve", "nm-gamma", "nm-coherence", "control", "all"};
    for (const char* s : stages) app.add_subcommand(s, std::string("run stage ") + s);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kUsage;
    }

    try {
        const dpnm::Stage stage = dpnm::parse_stage(app.get_subcommands().front()->get_name());
        const dpnm::RunConfig config = config_path.empty() ? dpnm::config_from_json_text("{}") : dpnm::load_config(config_path);
        const dpnm::RunResult result = dpnm::run_pipeline(config, stage, options);
        for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
        for (const auto& f : result.files) std::cout << f << "\n";
        std::cout << "manifest.json\n";
        return kOk;
    } catch (const dpnm::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const dpnm::ConvergenceError& e) {
        std::cerr << "convergence error: " << e.what() << "\n";
        return kConvergence;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kIo;
    }
}
