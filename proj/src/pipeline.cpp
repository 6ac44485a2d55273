#include "dpnm/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "dpnm/csv.hpp"
#include "dpnm/error.hpp"
#include "dpnm/simd/kernels.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace dpnm {

namespace {

const std::map<std::string_view, Stage>& stage_table() {
    static const std::map<std::string_view, Stage> t{
        {"modes", Stage::Modes},       {"sdf", Stage::Sdf},
        {"fit", Stage::Fit},           {"rate", Stage::Rate},
        {"evolve", Stage::Evolve},     {"nm-gamma", Stage::NmGamma},
        {"nm-coherence", Stage::NmCoherence}, {"control", Stage::Control},
        {"all", Stage::All}};
    return t;
}

}  // namespace

Stage parse_stage(std::string_view name) {
    const auto it = stage_table().find(name);
    if (it == stage_table().end()) throw ConfigError("unknown stage '" + std::string(name) + "'");
    return it->second;
}

std::string_view stage_name(Stage stage) {
    for (const auto& [k, v] : stage_table())
        if (v == stage) return k;
    return "unknown";
}

CouplingParams RunConfig::coupling_params(double omega_max) const {
    CouplingParams p;
    p.dipolar_strength = dipolar_strength;
    p.m_defect = chain.m_defect;
    p.lattice_const = chain.lattice_const;
    p.omega_cut = omega_cut_rel * omega_max;
    return p;
}

void RunConfig::validate() const {
    chain.validate();
    if (chain.n_bulk < 2) throw ConfigError("n_bulk must be >= 2 for the pipeline");
    if (!(dipolar_strength > 0.0)) throw ConfigError("coupling.dipolar_strength must be positive");
    if (!(omega_cut_rel >= 0.0)) throw ConfigError("coupling.omega_cut_rel must be non-negative");
    if (!(sdf.sigma_rel > 0.0)) throw ConfigError("sdf.sigma_rel must be positive");
    if (sdf.n_grid < 64) throw ConfigError("sdf.n_grid must be >= 64");
    if (sdf.max_iterations < 1) throw ConfigError("sdf.max_iterations must be >= 1");
    if (dynamics.temperatures_rel.empty()) throw ConfigError("dynamics.temperatures_rel must be non-empty");
    for (double t : dynamics.temperatures_rel)
        if (!(t >= 0.0)) throw ConfigError("temperatures must be non-negative");
    if (!(dynamics.horizon_factor > 0.0)) throw ConfigError("dynamics.horizon_factor must be positive");
    if (dynamics.samples_per_period < 40) throw ConfigError("dynamics.samples_per_period must be >= 40");
    if ((dynamics.initial_populations.array() < 0.0).any() || !(dynamics.initial_populations.sum() > 0.0))
        throw ConfigError("dynamics.initial_state populations must be non-negative with positive sum");
    if (!(nonmarkov.horizon_factor > 0.0)) throw ConfigError("nonmarkov.horizon_factor must be positive");
    if (nonmarkov.k_interface_sweep.empty() || nonmarkov.temperature_sweep_rel.empty())
        throw ConfigError("nonmarkov sweep lists must be non-empty");
    for (double k : nonmarkov.k_interface_sweep)
        if (!(k > 0.0)) throw ConfigError("k_interface_sweep entries must be positive");
    for (double t : nonmarkov.temperature_sweep_rel)
        if (!(t >= 0.0)) throw ConfigError("temperature_sweep_rel entries must be non-negative");
    if (!(control.t_end > 0.0) || control.n_samples < 2) throw ConfigError("control needs t_end > 0 and n_samples >= 2");
    if (!(control.initial_amplitudes.norm() > 0.0)) throw ConfigError("control.initial_amplitudes must be non-zero");
    if (output.precision < 1 || output.precision > 17) throw ConfigError("output.precision must be in [1, 17]");
    if (output.dos_bins < 2) throw ConfigError("output.dos_bins must be >= 2");
}

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const char* section) {
    if (!j.is_object()) throw ConfigError(std::string(section) + " must be an object");
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || item.key() == a;
        if (!ok) throw ConfigError("unknown key '" + item.key() + "' in " + section);
    }
}

template <class T>
void read(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

std::vector<double> read_list(const json& j, const char* key, std::vector<double> def) {
    return j.contains(key) ? j.at(key).get<std::vector<double>>() : def;
}

template <int N>
Eigen::Matrix<double, N, 1> read_vec(const json& v, const char* key) {
    const auto list = v.get<std::vector<double>>();
    if (list.size() != N) throw ConfigError(std::string(key) + " must have " + std::to_string(N) + " entries");
    Eigen::Matrix<double, N, 1> out;
    for (int i = 0; i < N; ++i) out[i] = list[i];
    return out;
}

}  // namespace

RunConfig config_from_json_text(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    RunConfig c;
    try {
        check_keys(root, {"chain", "coupling", "sdf", "dynamics", "nonmarkov", "control", "output"}, "config");
        if (root.contains("chain")) {
            const json& j = root["chain"];
            check_keys(j, {"n_bulk", "m_bulk", "m_defect", "k_bulk", "k_defect", "k_interface", "lattice_const", "boundary"},
                       "chain");
            read(j, "n_bulk", c.chain.n_bulk);
            read(j, "m_bulk", c.chain.m_bulk);
            read(j, "m_defect", c.chain.m_defect);
            read(j, "k_bulk", c.chain.k_bulk);
            read(j, "k_defect", c.chain.k_defect);
            read(j, "k_interface", c.chain.k_interface);
            read(j, "lattice_const", c.chain.lattice_const);
            if (j.contains("boundary")) {
                const auto b = j["boundary"].get<std::string>();
                if (b == "fixed") c.chain.boundary = Boundary::Fixed;
                else if (b == "free") c.chain.boundary = Boundary::Free;
                else throw ConfigError("chain.boundary must be 'fixed' or 'free'");
            }
        }
        if (root.contains("coupling")) {
            const json& j = root["coupling"];
            check_keys(j, {"dipolar_strength", "omega_cut_rel"}, "coupling");
            read(j, "dipolar_strength", c.dipolar_strength);
            read(j, "omega_cut_rel", c.omega_cut_rel);
        }
        if (root.contains("sdf")) {
            const json& j = root["sdf"];
            check_keys(j, {"sigma_rel", "n_grid", "max_iterations"}, "sdf");
            read(j, "sigma_rel", c.sdf.sigma_rel);
            read(j, "n_grid", c.sdf.n_grid);
            read(j, "max_iterations", c.sdf.max_iterations);
        }
        if (root.contains("dynamics")) {
            const json& j = root["dynamics"];
            check_keys(j, {"temperatures_rel", "horizon_factor", "samples_per_period", "bath", "initial_state", "ode_check"},
                       "dynamics");
            c.dynamics.temperatures_rel = read_list(j, "temperatures_rel", c.dynamics.temperatures_rel);
            read(j, "horizon_factor", c.dynamics.horizon_factor);
            read(j, "samples_per_period", c.dynamics.samples_per_period);
            read(j, "ode_check", c.dynamics.ode_check);
            if (j.contains("bath")) {
                const auto b = j["bath"].get<std::string>();
                if (b == "model") c.dynamics.bath = BathKind::Model;
                else if (b == "sampled") c.dynamics.bath = BathKind::Sampled;
                else throw ConfigError("dynamics.bath must be 'model' or 'sampled'");
            }
            if (j.contains("initial_state")) {
                const json& s = j["initial_state"];
                if (s.is_string()) {
                    if (s.get<std::string>() != "optimal") throw ConfigError("dynamics.initial_state must be 'optimal' or 4 populations");
                    c.dynamics.optimal_initial_state = true;
                } else {
                    c.dynamics.optimal_initial_state = false;
                    c.dynamics.initial_populations = read_vec<4>(s, "dynamics.initial_state");
                }
            }
        }
        if (root.contains("nonmarkov")) {
            const json& j = root["nonmarkov"];
            check_keys(j, {"horizon_factor", "k_interface_sweep", "temperature_sweep_rel"}, "nonmarkov");
            read(j, "horizon_factor", c.nonmarkov.horizon_factor);
            c.nonmarkov.k_interface_sweep = read_list(j, "k_interface_sweep", c.nonmarkov.k_interface_sweep);
            c.nonmarkov.temperature_sweep_rel = read_list(j, "temperature_sweep_rel", c.nonmarkov.temperature_sweep_rel);
        }
        if (root.contains("control")) {
            const json& j = root["control"];
            check_keys(j, {"mode", "field", "t_end", "n_samples", "initial_amplitudes"}, "control");
            if (j.contains("mode")) {
                const auto m = j["mode"].get<std::string>();
                if (m == "local") c.control.mode = FieldMode::Local;
                else if (m == "global") c.control.mode = FieldMode::Global;
                else throw ConfigError("control.mode must be 'local' or 'global'");
            }
            if (j.contains("field")) c.control.field = read_vec<3>(j["field"], "control.field");
            read(j, "t_end", c.control.t_end);
            read(j, "n_samples", c.control.n_samples);
            if (j.contains("initial_amplitudes"))
                c.control.initial_amplitudes = read_vec<4>(j["initial_amplitudes"], "control.initial_amplitudes");
        }
        if (root.contains("output")) {
            const json& j = root["output"];
            check_keys(j, {"directory", "precision", "dos_bins"}, "output");
            read(j, "directory", c.output.directory);
            read(j, "precision", c.output.precision);
            read(j, "dos_bins", c.output.dos_bins);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config type error: ") + e.what());
    }
    c.validate();
    if (c.control.initial_amplitudes.norm() > 0.0) c.control.initial_amplitudes.normalize();
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return config_from_json_text(ss.str());
}

namespace {

json config_json(const RunConfig& c) {
    auto vec = [](const auto& v) {
        std::vector<double> out(v.data(), v.data() + v.size());
        return out;
    };
    json j;
    j["chain"] = {{"n_bulk", c.chain.n_bulk},       {"m_bulk", c.chain.m_bulk},
                  {"m_defect", c.chain.m_defect},   {"k_bulk", c.chain.k_bulk},
                  {"k_defect", c.chain.k_defect},   {"k_interface", c.chain.k_interface},
                  {"lattice_const", c.chain.lattice_const},
                  {"boundary", c.chain.boundary == Boundary::Fixed ? "fixed" : "free"}};
    j["coupling"] = {{"dipolar_strength", c.dipolar_strength}, {"omega_cut_rel", c.omega_cut_rel}};
    j["sdf"] = {{"sigma_rel", c.sdf.sigma_rel}, {"n_grid", c.sdf.n_grid}, {"max_iterations", c.sdf.max_iterations}};
    j["dynamics"] = {{"temperatures_rel", c.dynamics.temperatures_rel},
                     {"horizon_factor", c.dynamics.horizon_factor},
                     {"samples_per_period", c.dynamics.samples_per_period},
                     {"bath", c.dynamics.bath == BathKind::Model ? "model" : "sampled"},
                     {"ode_check", c.dynamics.ode_check}};
    if (c.dynamics.optimal_initial_state) j["dynamics"]["initial_state"] = "optimal";
    else j["dynamics"]["initial_state"] = vec(c.dynamics.initial_populations);
    j["nonmarkov"] = {{"horizon_factor", c.nonmarkov.horizon_factor},
                      {"k_interface_sweep", c.nonmarkov.k_interface_sweep},
                      {"temperature_sweep_rel", c.nonmarkov.temperature_sweep_rel}};
    j["control"] = {{"mode", c.control.mode == FieldMode::Local ? "local" : "global"},
                    {"field", vec(c.control.field)},
                    {"t_end", c.control.t_end},
                    {"n_samples", c.control.n_samples},
                    {"initial_amplitudes", vec(c.control.initial_amplitudes)}};
    j["output"] = {{"directory", c.output.directory}, {"precision", c.output.precision}, {"dos_bins", c.output.dos_bins}};
    return j;
}

}  // namespace

std::string config_to_json(const RunConfig& config) { return config_json(config).dump(2); }

namespace {

json bath_key(const RunConfig& c, double k_interface) {
    json j = config_json(c);
    j["chain"]["k_interface"] = k_interface;
    return {{"chain", j["chain"]}, {"coupling", j["coupling"]}, {"sdf", j["sdf"]}};
}

json params_json(const SdfParams& p) {
    return {{"j0", p.j0},
            {"gamma", p.gamma},
            {"omega_loc", p.omega_loc},
            {"n_exp", p.n_exp},
            {"omega_max", p.omega_max},
            {"goodness", p.goodness},
            {"converged", p.converged},
            {"iterations", p.iterations}};
}

SdfParams params_from(const json& j) {
    SdfParams p;
    p.j0 = j.at("j0").get<double>();
    p.gamma = j.at("gamma").get<double>();
    p.omega_loc = j.at("omega_loc").get<double>();
    p.n_exp = j.at("n_exp").get<double>();
    p.omega_max = j.at("omega_max").get<double>();
    p.goodness = j.at("goodness").get<double>();
    p.converged = j.at("converged").get<bool>();
    p.iterations = j.at("iterations").get<int>();
    return p;
}

}  // namespace

Bath compute_bath(const RunConfig& config, double k_interface, const std::string& cache_dir, bool need_modes) {
    const json key = bath_key(config, k_interface);
    const std::string digest = string_sha256(key.dump());
    const fs::path cache_file = cache_dir.empty() ? fs::path() : fs::path(cache_dir) / ("bath-" + digest.substr(0, 16) + ".json");

    Bath bath;
    bath.chain = config.chain;
    bath.chain.k_interface = k_interface;

    if (!need_modes && !cache_file.empty() && fs::exists(cache_file)) {
        try {
            std::ifstream in(cache_file);
            const json j = json::parse(in);
            if (j.at("key") == key) {
                bath.fit = params_from(j.at("fit"));
                const json& s = j.at("sdf");
                bath.sdf.grid = s.at("grid").get<std::vector<double>>();
                bath.sdf.values = s.at("values").get<std::vector<double>>();
                bath.sdf.sigma = s.at("sigma").get<double>();
                bath.sdf.hr_sum = s.at("hr_sum").get<double>();
                return bath;
            }
        } catch (const std::exception&) {
            // unreadable cache entries are recomputed
        }
    }

    bath.modes = solve_modes(build_dynamical_matrix(bath.chain));
    bath.has_modes = true;
    bath.couplings = spin_phonon_couplings(bath.modes, config.coupling_params(bath.modes.omega_max));
    bath.sdf = numerical_sdf(bath.couplings, bath.modes, config.sdf.sigma_rel * bath.modes.omega_max, config.sdf.n_grid);
    FitOptions fo;
    fo.max_iterations = config.sdf.max_iterations;
    bath.fit = fit_model(bath.sdf, fo);

    if (!cache_file.empty()) {
        fs::create_directories(cache_file.parent_path());
        json j;
        j["key"] = key;
        j["fit"] = params_json(bath.fit);
        j["sdf"] = {{"grid", bath.sdf.grid}, {"values", bath.sdf.values}, {"sigma", bath.sdf.sigma}, {"hr_sum", bath.sdf.hr_sum}};
        const fs::path tmp = cache_file.string() + ".tmp";
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            out << j.dump();
        }
        fs::rename(tmp, cache_file);
    }
    return bath;
}

namespace {

template <class Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
    const std::size_t workers = std::min<std::size_t>(std::max(threads, 1), std::max<std::size_t>(n, 1));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex m;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(m);
                    if (!error) error = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

SpectralFunction bath_function(const RunConfig& c, const Bath& b) {
    return c.dynamics.bath == BathKind::Model ? SpectralFunction::from_model(b.fit) : SpectralFunction::from_samples(b.sdf);
}

std::vector<double> time_grid(const SdfParams& fit, double horizon_factor, int samples_per_period) {
    const double t_end = horizon_factor / fit.gamma;
    const double periods = t_end * fit.omega_loc / (2.0 * std::numbers::pi);
    const auto n = static_cast<std::size_t>(std::ceil(periods * samples_per_period));
    return uniform_times(t_end, std::max<std::size_t>(n, 16));
}

class Runner {
public:
    Runner(const RunConfig& c, const RunOptions& o) : cfg_(c), opt_(o) {
        dir_ = o.out_dir.empty() ? fs::path(c.output.directory) : fs::path(o.out_dir);
        fs::create_directories(dir_);
    }

    RunResult run(Stage s) {
        switch (s) {
            case Stage::Modes: modes(); break;
            case Stage::Sdf: sdf(); break;
            case Stage::Fit: fit(); break;
            case Stage::Rate: rate(); break;
            case Stage::Evolve: evolve(); break;
            case Stage::NmGamma: nm(false); break;
            case Stage::NmCoherence: nm(true); break;
            case Stage::Control: control(); break;
            case Stage::All:
                modes();
                sdf();
                fit();
                rate();
                evolve();
                nm(true);
                control();
                break;
        }
        manifest(s);
        return result_;
    }

private:
    const RunConfig& cfg_;
    const RunOptions& opt_;
    fs::path dir_;
    RunResult result_;
    std::optional<Bath> base_;

    const Bath& base(bool need_modes) {
        if (!base_ || (need_modes && !base_->has_modes)) {
            base_ = compute_bath(cfg_, cfg_.chain.k_interface, opt_.stage_cache, need_modes);
            note_bath(*base_);
        }
        return *base_;
    }

    void note_bath(const Bath& b) {
        if (b.has_modes && !b.couplings.weak_coupling)
            warn("k_I=" + format_number(b.chain.k_interface, 6) + ": max|g|/E = " +
                 format_number(b.couplings.coupling_ratio, 6) + " exceeds the weak-coupling limit " +
                 format_number(weak_coupling_limit, 3));
        if (!b.fit.converged)
            warn("k_I=" + format_number(b.chain.k_interface, 6) + ": SDF fit did not converge; best-so-far parameters used");
    }

    void warn(const std::string& w) {
        if (std::find(result_.warnings.begin(), result_.warnings.end(), w) == result_.warnings.end())
            result_.warnings.push_back(w);
    }

    CsvWriter open(const std::string& name, const std::vector<std::string>& header) {
        if (std::find(result_.files.begin(), result_.files.end(), name) == result_.files.end())
            result_.files.push_back(name);
        return CsvWriter((dir_ / name).string(), header, cfg_.output.precision);
    }

    void modes() {
        const Bath& b = base(true);
        {
            auto w = open("modes.csv", {"lambda", "omega (freq)"});
            for (std::size_t l = 0; l < b.modes.size(); ++l) w.row({static_cast<double>(l + 1), b.modes.frequencies[l]});
            w.close();
        }
        {
            const Histogram h = density_of_states(b.modes, cfg_.output.dos_bins);
            auto w = open("dos.csv", {"omega (freq)", "count"});
            for (std::size_t i = 0; i < h.centers.size(); ++i) w.row({h.centers[i], static_cast<double>(h.counts[i])});
            w.close();
        }
        {
            auto w = open("couplings.csv", {"lambda", "omega (freq)", "P_S", "P_A", "g (energy)"});
            for (std::size_t l = 0; l < b.modes.size(); ++l)
                w.row({static_cast<double>(l + 1), b.modes.frequencies[l], b.couplings.projections_sym[l],
                       b.couplings.projections_asym[l], b.couplings.g[l]});
            w.close();
        }
    }

    void sdf() {
        const Bath& b = base(false);
        auto w = open("sdf.csv", {"omega (freq)", "J (energy^2/freq)"});
        for (std::size_t i = 0; i < b.sdf.grid.size(); ++i) w.row({b.sdf.grid[i], b.sdf.values[i]});
        w.close();
    }

    void fit() {
        const Bath& b = base(false);
        json j = params_json(b.fit);
        j["k_interface"] = b.chain.k_interface;
        j["sigma"] = b.sdf.sigma;
        j["hr_sum"] = b.sdf.hr_sum;
        j["sdf_integral"] = sdf_integral(b.sdf);
        write_text("fit.json", j.dump(2) + "\n");
        auto w = open("sdf_fit.csv", {"omega (freq)", "J (energy^2/freq)", "J_model (energy^2/freq)"});
        for (std::size_t i = 0; i < b.sdf.grid.size(); ++i)
            w.row({b.sdf.grid[i], b.sdf.values[i], eval_model(b.fit, b.sdf.grid[i], b.fit.omega_max)});
        w.close();
    }

    void write_text(const std::string& name, const std::string& text) {
        std::ofstream out(dir_ / name, std::ios::binary | std::ios::trunc);
        out << text;
        out.close();
        if (out.fail()) throw std::runtime_error("failed writing " + (dir_ / name).string());
        if (std::find(result_.files.begin(), result_.files.end(), name) == result_.files.end()) result_.files.push_back(name);
    }

    struct TempRun {
        double temperature;
        RateProfile profile;
        std::shared_ptr<const RateEngine> engine;
    };

    std::vector<TempRun> profiles(const Bath& b, const std::vector<double>& temps_rel, double horizon) {
        const SpectralFunction j = bath_function(cfg_, b);
        const std::vector<double> times = time_grid(b.fit, horizon, cfg_.dynamics.samples_per_period);
        std::vector<TempRun> out(temps_rel.size());
        parallel_for(temps_rel.size(), opt_.threads, [&](std::size_t i) {
            const double temp = temps_rel[i] * b.fit.omega_max;
            auto engine = std::make_shared<const RateEngine>(j, temp, times.back());
            out[i] = {temp, engine->profile(times), engine};
        });
        return out;
    }

    void rate() {
        const Bath& b = base(false);
        auto w = open("rate.csv", {"T (freq)", "t (1/freq)", "gamma_c (freq)", "gamma_approx (freq)", "upsilon", "upsilon_approx"});
        for (const auto& run : profiles(b, cfg_.dynamics.temperatures_rel, cfg_.dynamics.horizon_factor)) {
            const auto& p = run.profile;
            for (std::size_t i = 0; i < p.size(); ++i)
                w.row({run.temperature, p.times[i], p.gamma_c[i], rate_approx(b.fit, run.temperature, p.times[i]), p.upsilon[i],
                       upsilon_approx(b.fit, run.temperature, p.times[i])});
        }
        w.close();
    }

    void evolve() {
        const Bath& b = base(false);
        const BellSystem sys = BellSystem::make(cfg_.dipolar_strength / std::pow(cfg_.chain.lattice_const, 3));
        auto w = open("evolve.csv", {"T (freq)", "t (1/freq)", "rho11", "rho22", "rho33", "rho44", "re_rho12", "im_rho12",
                                     "re_rho13", "im_rho13", "re_rho14", "im_rho14", "re_rho23", "im_rho23", "re_rho24",
                                     "im_rho24", "re_rho34", "im_rho34", "coherence", "magnetization_z", "upsilon",
                                     "ode_deviation"});
        for (const auto& run : profiles(b, cfg_.dynamics.temperatures_rel, cfg_.dynamics.horizon_factor)) {
            Eigen::Vector4d pops = cfg_.dynamics.initial_populations / cfg_.dynamics.initial_populations.sum();
            if (cfg_.dynamics.optimal_initial_state) {
                const CoherenceWeights cw = compute_weights(run.profile, sys);
                if (!cw.plateau_reached) warn("evolve: upsilon plateau not reached within the horizon");
                pops = maximize_coherence_nm(cw).populations;
            }
            const BellDensityMatrix rho0 = BellDensityMatrix::from_amplitudes(pops.cwiseSqrt().cast<std::complex<double>>());
            std::vector<BellDensityMatrix> ode;
            if (cfg_.dynamics.ode_check) {
                const RateEngine& eng = *run.engine;
                ode = evolve_ode(rho0, sys, [&eng](double t) { return eng.rate(t); }, run.profile.times);
            }
            for (std::size_t i = 0; i < run.profile.size(); ++i) {
                const BellDensityMatrix r = evolve_analytic(rho0, sys, std::max(run.profile.upsilon[i], 0.0));
                const auto& m = r.rho;
                const double dev = ode.empty() ? std::nan("") : (ode[i].rho - m).cwiseAbs().maxCoeff();
                w.row({run.temperature, run.profile.times[i], m(0, 0).real(), m(1, 1).real(), m(2, 2).real(), m(3, 3).real(),
                       m(0, 1).real(), m(0, 1).imag(), m(0, 2).real(), m(0, 2).imag(), m(0, 3).real(), m(0, 3).imag(),
                       m(1, 2).real(), m(1, 2).imag(), m(1, 3).real(), m(1, 3).imag(), m(2, 3).real(), m(2, 3).imag(),
                       coherence(r), magnetization_z(r), run.profile.upsilon[i], dev});
            }
        }
        w.close();
    }

    void nm(bool with_coherence) {
        const auto& ks = cfg_.nonmarkov.k_interface_sweep;
        const auto& ts = cfg_.nonmarkov.temperature_sweep_rel;
        const BellSystem sys = BellSystem::make(cfg_.dipolar_strength / std::pow(cfg_.chain.lattice_const, 3));
        std::vector<std::vector<std::vector<double>>> rows(ks.size());
        std::vector<Bath> baths(ks.size());
        parallel_for(ks.size(), opt_.threads, [&](std::size_t i) { baths[i] = compute_bath(cfg_, ks[i], opt_.stage_cache); });
        for (std::size_t i = 0; i < ks.size(); ++i) {
            note_bath(baths[i]);
            const Bath& b = baths[i];
            const auto runs = profiles(b, ts, cfg_.nonmarkov.horizon_factor);
            for (std::size_t k = 0; k < runs.size(); ++k) {
                const double temp = runs[k].temperature;
                const double nn = n_gamma_numeric(runs[k].profile);
                const double nc = n_gamma_closed(b.fit, temp);
                double ncoh = std::nan("");
                Eigen::Vector4d p = Eigen::Vector4d::Constant(std::nan(""));
                if (with_coherence) {
                    const CoherenceWeights cw = compute_weights(runs[k].profile, sys);
                    if (!cw.plateau_reached) warn("nm: upsilon plateau not reached within the horizon");
                    const CoherenceOptimum opt = maximize_coherence_nm(cw);
                    ncoh = opt.n_coherence;
                    p = opt.populations;
                }
                rows[i].push_back({ks[i], temp, ts[k], nn, nc, ncoh, p[0], p[1], p[2], p[3], b.fit.gamma, b.fit.omega_loc,
                                   b.fit.goodness});
            }
        }
        auto w = open("nm.csv", {"k_I (stiffness)", "T (freq)", "T/omega_max", "n_gamma_numeric", "n_gamma_closed",
                                 "n_coherence", "p1", "p2", "p3", "p4", "gamma (freq)", "omega_loc (freq)", "fit_r2"});
        for (const auto& block : rows)
            for (const auto& r : block) w.row(r);
        w.close();
    }

    void control() {
        const BellSystem sys = BellSystem::make(cfg_.dipolar_strength / std::pow(cfg_.chain.lattice_const, 3));
        AmplitudeState c0;
        c0.c = cfg_.control.initial_amplitudes.normalized().cast<std::complex<double>>();
        const auto times = uniform_times(cfg_.control.t_end, static_cast<std::size_t>(cfg_.control.n_samples - 1));
        const auto traj = evolve_schrodinger(c0, ControlField::constant(cfg_.control.field), sys.energies, times, cfg_.control.mode);
        auto w = open("control.csv", {"t (1/freq)", "pop1", "pop2", "pop3", "pop4", "coherence_observables", "norm"});
        for (std::size_t i = 0; i < times.size(); ++i) {
            const auto& c = traj[i].c;
            const BellDensityMatrix rho = BellDensityMatrix::from_amplitudes(c);
            w.row({times[i], std::norm(c[0]), std::norm(c[1]), std::norm(c[2]), std::norm(c[3]), coherence_from_observables(rho),
                   c.norm()});
        }
        w.close();
    }

    void manifest(Stage s) {
        json files = json::object();
        for (const auto& f : result_.files) files[f] = file_sha256((dir_ / f).string());
        const json cfg = config_json(cfg_);
        json m;
        m["stage"] = std::string(stage_name(s));
        m["config"] = cfg;
        m["config_sha256"] = string_sha256(cfg.dump());
        m["files"] = files;
        m["warnings"] = result_.warnings;
        m["simd_kernels"] = std::string(simd::kernels().name);
        std::ofstream out(dir_ / "manifest.json", std::ios::binary | std::ios::trunc);
        out << m.dump(2) << "\n";
        if (!out) throw std::runtime_error("failed writing manifest");
    }
};

}  // namespace

RunResult run_pipeline(const RunConfig& config, Stage stage, const RunOptions& options) {
    config.validate();
    Runner r(config, options);
    return r.run(stage);
}

}  // namespace dpnm
