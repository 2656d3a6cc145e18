#pragma once

// Run orchestration shared by the CLI: config resolution, pipeline execution,
// artifact emission, and the reproducibility manifest.

#include <chrono>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "omsim/dynamics.hpp"
#include "omsim/io.hpp"
#include "omsim/moment_system.hpp"
#include "omsim/params.hpp"
#include "omsim/presets.hpp"
#include "omsim/sideband.hpp"
#include "omsim/spectrum.hpp"
#include "omsim/toml.hpp"
#include "omsim/two_time.hpp"

namespace omsim::run {

constexpr const char* kVersion = "0.1.0";

enum class Command { validate, steady, sweep, evolve, spectrum, presets };

inline const char* command_name(Command c) {
    switch (c) {
        case Command::validate: return "validate";
        case Command::steady: return "steady";
        case Command::sweep: return "sweep";
        case Command::evolve: return "evolve";
        case Command::spectrum: return "spectrum";
        case Command::presets: return "presets";
    }
    return "?";
}

struct NumericOptions {
    double tol = 1e-9;
    double tol_ss = 1e-9;
    int max_periods = 40000;
    int cycle_samples = 512;
    double T = 0.0;        // correlation window; 0 -> 10 / gamma
    double dt = 0.125;     // correlation sample step
    double grid_lo = -1.5, grid_hi = 3.5;
    int grid_points = 4001;
    double patch_half = 0.05;
    double patch_step = 5e-5;
    double peak_window = 0.01;
    double linewidth = 2e-5;
    bool hann = false;
    unsigned jobs = 0;
    double t_end = 0.0;     // evolve horizon; 0 -> 50 periods
    double sample_dt = 0.0; // evolve sampling; 0 -> period / 64
    double gamma_lo = 1e-4, gamma_hi = 1e-3;
    int gamma_n = 40;
    double K_lo = 0.0, K_hi = 1e-3;
    int K_n = 60;
};

struct RunConfig {
    Command command = Command::validate;
    std::optional<std::string> preset_name;
    SystemParams params;
    DriveConfig drive;
    bool from_config_file = false;
    bool model_resolved = false;
    NumericOptions num;
    std::string output_dir = ".";
    std::vector<std::pair<std::string, std::string>> overrides;
};

// ---------------------------------------------------------------------------
// Config resolution

inline Cavity parse_cavity(const std::string& name) {
    if (name == "controller" || name == "c") return Cavity::controller;
    if (name == "target" || name == "t") return Cavity::target;
    throw ValidationError("unknown cavity '" + name + "' (use controller|target)");
}

inline void load_config_file(RunConfig& cfg, const std::string& path) {
    const auto doc = toml::parse(read_text_file(path));

    auto number = [&](const std::string& key, double& out) {
        const auto it = doc.root.find(key);
        if (it == doc.root.end()) return;
        if (!it->second.is_number()) throw ValidationError("config key " + key + " must be a number");
        out = it->second.as_number();
    };
    number("params.Omega0", cfg.params.Omega0);
    number("params.omega0", cfg.params.omega0);
    number("params.g0", cfg.params.g0);
    number("params.kappa", cfg.params.kappa);
    number("params.gamma", cfg.params.gamma);
    number("params.K", cfg.params.K);
    number("params.Omega_c", cfg.params.Omega_c);
    number("params.Omega_t", cfg.params.Omega_t);

    if (const auto it = doc.root.find("drive.frame_detuning"); it != doc.root.end()) {
        cfg.drive.frame_detuning = it->second.is_string()
                                       ? parse_rational(it->second.as_string())
                                       : parse_rational(fmt17(it->second.as_number()));
    }
    if (const auto it = doc.table_arrays.find("drive.tones"); it != doc.table_arrays.end()) {
        for (const auto& table : it->second) {
            DriveTone tone;
            const auto cav = table.find("cavity");
            if (cav == table.end() || !cav->second.is_string())
                throw ValidationError("drive tone needs a cavity string");
            tone.cavity = parse_cavity(cav->second.as_string());
            const auto det = table.find("detuning");
            if (det == table.end()) throw ValidationError("drive tone needs a detuning");
            tone.detuning = det->second.is_string() ? parse_rational(det->second.as_string())
                                                    : parse_rational(fmt17(det->second.as_number()));
            const auto amp = table.find("amplitude");
            if (amp == table.end()) throw ValidationError("drive tone needs an amplitude");
            if (amp->second.is_number()) {
                tone.amplitude = cplx(amp->second.as_number(), 0.0);
            } else if (amp->second.is_array() && amp->second.as_array().size() == 2) {
                tone.amplitude = cplx(amp->second.as_array()[0], amp->second.as_array()[1]);
            } else {
                throw ValidationError("tone amplitude must be a number or [re, im]");
            }
            cfg.drive.tones.push_back(tone);
        }
    }
    if (const auto it = doc.root.find("output.dir"); it != doc.root.end())
        if (it->second.is_string()) cfg.output_dir = it->second.as_string();
    cfg.from_config_file = true;
    cfg.model_resolved = true;
}

// --set key=value, applied after preset/config resolution.
inline void apply_override(RunConfig& cfg, const std::string& key, const std::string& value) {
    auto as_number = [&] {
        try {
            return std::stod(value);
        } catch (const std::exception&) {
            throw ValidationError("override " + key + ": not a number: '" + value + "'");
        }
    };
    std::string bare = key;
    for (const char* prefix : {"params.", "numeric.", "spectrum."}) {
        const std::string p(prefix);
        if (bare.size() > p.size() && bare.rfind(p, 0) == 0) {
            bare = bare.substr(p.size());
            break;
        }
    }

    if (bare == "Omega0") cfg.params.Omega0 = as_number();
    else if (bare == "omega0") cfg.params.omega0 = as_number();
    else if (bare == "g0") cfg.params.g0 = as_number();
    else if (bare == "kappa") cfg.params.kappa = as_number();
    else if (bare == "gamma") cfg.params.gamma = as_number();
    else if (bare == "K") cfg.params.K = as_number();
    else if (bare == "Omega_c") cfg.params.Omega_c = as_number();
    else if (bare == "Omega_t") cfg.params.Omega_t = as_number();
    else if (bare == "frame_detuning" || key == "drive.frame_detuning")
        cfg.drive.frame_detuning = parse_rational(value);
    else if (bare == "tol") cfg.num.tol = as_number();
    else if (bare == "tol_ss") cfg.num.tol_ss = as_number();
    else if (bare == "max_periods") cfg.num.max_periods = static_cast<int>(as_number());
    else if (bare == "cycle_samples") cfg.num.cycle_samples = static_cast<int>(as_number());
    else if (bare == "T") cfg.num.T = as_number();
    else if (bare == "dt") cfg.num.dt = as_number();
    else if (bare == "grid_lo") cfg.num.grid_lo = as_number();
    else if (bare == "grid_hi") cfg.num.grid_hi = as_number();
    else if (bare == "grid_points") cfg.num.grid_points = static_cast<int>(as_number());
    else if (bare == "peak_window") cfg.num.peak_window = as_number();
    else if (bare == "linewidth") cfg.num.linewidth = as_number();
    else if (bare == "hann") cfg.num.hann = (value == "true" || value == "1");
    else if (bare == "t_end") cfg.num.t_end = as_number();
    else if (bare == "sample_dt") cfg.num.sample_dt = as_number();
    else throw ValidationError("unknown --set key '" + key + "'");
    cfg.overrides.emplace_back(key, value);
}

inline void resolve_model(RunConfig& cfg) {
    if (cfg.preset_name && cfg.from_config_file)
        throw ValidationError("give either --preset or --config, not both");
    if (cfg.preset_name && !cfg.model_resolved) {
        const auto& p = preset(*cfg.preset_name);
        cfg.params = p.params;
        cfg.drive = p.drive;
        cfg.model_resolved = true;
    }
    if (!cfg.model_resolved && cfg.command != Command::presets)
        throw ValidationError("no model: give --preset NAME or --config FILE");
}

// ---------------------------------------------------------------------------
// Manifest support

inline std::string sha256_file(const std::filesystem::path& path) {
    const std::string data = read_text_file(path);
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr))
        throw IoError("sha256 failure on " + path.string());
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

inline ordered_json params_json(const SystemParams& p) {
    ordered_json j;
    j["Omega0"] = p.Omega0;
    j["omega0"] = p.omega0;
    j["g0"] = p.g0;
    j["kappa"] = p.kappa;
    j["gamma"] = p.gamma;
    j["K"] = p.K;
    j["Omega_c"] = p.Omega_c;
    j["Omega_t"] = p.Omega_t;
    return j;
}

inline ordered_json drive_json(const DriveConfig& d) {
    ordered_json j;
    j["frame_detuning"] = d.frame_detuning.str();
    j["tones"] = ordered_json::array();
    for (const auto& tone : d.tones) {
        ordered_json t;
        t["cavity"] = cavity_name(tone.cavity);
        t["detuning"] = tone.detuning.str();
        t["amplitude"] = json_complex(tone.amplitude);
        j["tones"].push_back(t);
    }
    return j;
}

class RunContext {
public:
    RunContext(const RunConfig& cfg) : cfg_(cfg), start_(std::chrono::steady_clock::now()) {
        std::error_code ec;
        std::filesystem::create_directories(cfg.output_dir, ec);
        if (ec) throw IoError("cannot create output directory " + cfg.output_dir);
    }

    std::filesystem::path path(const std::string& name) const {
        return std::filesystem::path(cfg_.output_dir) / name;
    }

    void register_output(const std::string& name) { outputs_.push_back(name); }
    void note(const std::string& key, ordered_json value) { extra_[key] = std::move(value); }

    void write_manifest() {
        ordered_json m;
        m["command"] = command_name(cfg_.command);
        if (cfg_.preset_name) m["preset"] = *cfg_.preset_name;
        m["params"] = params_json(cfg_.params);
        m["drive"] = drive_json(cfg_.drive);
        ordered_json overrides = ordered_json::array();
        for (const auto& [k, v] : cfg_.overrides)
            overrides.push_back(ordered_json::array({k, v}));
        m["overrides"] = overrides;
        ordered_json num;
        num["tol"] = cfg_.num.tol;
        num["tol_ss"] = cfg_.num.tol_ss;
        num["max_periods"] = cfg_.num.max_periods;
        num["cycle_samples"] = cfg_.num.cycle_samples;
        num["T"] = cfg_.num.T;
        num["dt"] = cfg_.num.dt;
        num["grid"] = ordered_json::array({cfg_.num.grid_lo, cfg_.num.grid_hi, cfg_.num.grid_points});
        num["peak_window"] = cfg_.num.peak_window;
        num["linewidth"] = cfg_.num.linewidth;
        num["hann"] = cfg_.num.hann;
        m["numeric"] = num;
        m["versions"] = ordered_json{{"omsim", kVersion}};
        for (auto& [k, v] : extra_.items()) m[k] = v;
        m["wall_clock_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        ordered_json files = ordered_json::array();
        for (const auto& name : outputs_) {
            ordered_json f;
            f["file"] = name;
            f["sha256"] = sha256_file(path(name));
            files.push_back(f);
        }
        m["outputs"] = files;
        write_text_file(path("manifest.json"), m.dump(2) + "\n");
    }

private:
    const RunConfig& cfg_;
    std::chrono::steady_clock::time_point start_;
    std::vector<std::string> outputs_;
    ordered_json extra_;
};

// ---------------------------------------------------------------------------
// Commands

inline int cmd_validate(const RunConfig& cfg, std::ostream& out) {
    const auto diags = validate(cfg.params, cfg.drive);
    for (const auto& d : diags)
        out << (d.severity == Severity::error ? "error: " : "warning: ") << d.message << "\n";
    if (diags.empty()) out << "ok: no errors, no warnings\n";
    out << "period: " << fmt17(drive_period(cfg.drive, cfg.params.Omega0)) << "\n";
    return has_errors(diags) ? 1 : 0;
}

inline int cmd_presets(std::ostream& out) {
    for (const auto& p : preset_catalog()) {
        out << p.name << ": kappa=" << p.params.kappa << " g0=" << p.params.g0
            << " gamma=" << p.params.gamma << " K=" << p.params.K << " tones=[";
        for (std::size_t i = 0; i < p.drive.tones.size(); ++i) {
            const auto& t = p.drive.tones[i];
            out << (i ? ", " : "") << (t.cavity == Cavity::controller ? "c" : "t") << ":("
                << t.detuning.str() << ", " << t.amplitude.real() << ")";
        }
        out << "]  # " << p.notes << "\n";
    }
    return 0;
}

inline ordered_json sideband_json(const SidebandSolution& s) {
    ordered_json j;
    j["a_c0_bar"] = json_complex(s.a_c0_bar);
    j["a_cp_bar"] = json_complex(s.a_cp_bar);
    j["a_tp_bar"] = json_complex(s.a_tp_bar);
    j["g_cc_bar"] = json_complex(s.g_cc_bar);
    j["g_c_bar"] = json_complex(s.g_c_bar);
    j["g_t_bar"] = json_complex(s.g_t_bar);
    j["zeta"] = json_complex(s.zeta);
    j["a_t0"] = json_complex(s.a_t0);
    j["a_t0_abs"] = std::abs(s.a_t0);
    j["a_cm"] = json_complex(s.a_cm);
    j["b_c"] = json_complex(s.b_c);
    j["b_t"] = json_complex(s.b_t);
    return j;
}

inline int cmd_steady(const RunConfig& cfg, std::ostream& out) {
    RunContext ctx(cfg);
    const auto closed = stokes_closed_form(cfg.params, cfg.drive);
    const auto oracle = stokes_linear_solve(cfg.params, cfg.drive);
    ordered_json j;
    j["closed_form"] = sideband_json(closed);
    j["linear_solve"] = sideband_json(oracle);
    ordered_json diff;
    diff["a_t0"] = std::abs(closed.a_t0 - oracle.a_t0);
    diff["a_cm"] = std::abs(closed.a_cm - oracle.a_cm);
    diff["b_c"] = std::abs(closed.b_c - oracle.b_c);
    diff["b_t"] = std::abs(closed.b_t - oracle.b_t);
    const double scale = std::max(std::abs(oracle.a_t0), 1e-300);
    diff["a_t0_relative"] = std::abs(closed.a_t0 - oracle.a_t0) / scale;
    j["difference"] = diff;
    write_text_file(ctx.path("steady.json"), j.dump(2) + "\n");
    ctx.register_output("steady.json");
    ctx.write_manifest();
    out << "steady: |a_t0| = " << fmt17(std::abs(closed.a_t0))
        << " (closed form vs oracle rel diff " << diff["a_t0_relative"].dump() << ")\n";
    return 0;
}

inline int cmd_sweep(const RunConfig& cfg, std::ostream& out) {
    RunContext ctx(cfg);
    auto linspace = [](double lo, double hi, int n) {
        std::vector<double> v;
        for (int i = 0; i < n; ++i)
            v.push_back(n == 1 ? lo : lo + (hi - lo) * i / static_cast<double>(n - 1));
        return v;
    };
    const auto gammas = linspace(cfg.num.gamma_lo, cfg.num.gamma_hi, cfg.num.gamma_n);
    const auto Ks = linspace(cfg.num.K_lo, cfg.num.K_hi, cfg.num.K_n);
    const auto grid = sweep_gamma_K(cfg.params, cfg.drive, gammas, Ks, cfg.num.jobs);

    CsvWriter grid_csv(ctx.path("sweep_grid.csv"), {"gamma", "K", "magnitude"});
    for (std::size_t ig = 0; ig < gammas.size(); ++ig)
        for (std::size_t ik = 0; ik < Ks.size(); ++ik)
            grid_csv.row({gammas[ig], Ks[ik], grid.at(ig, ik)});
    grid_csv.close();
    ctx.register_output("sweep_grid.csv");

    CsvWriter ridge_csv(ctx.path("sweep_ridge.csv"), {"gamma", "K_star", "magnitude_at_star"});
    for (const auto& r : grid.ridge) ridge_csv.row({r.gamma, r.K_star, r.magnitude});
    ridge_csv.close();
    ctx.register_output("sweep_ridge.csv");

    ctx.write_manifest();
    out << "sweep: " << gammas.size() << " x " << Ks.size() << " grid written\n";
    return 0;
}

inline int cmd_evolve(const RunConfig& cfg, std::ostream& out) {
    RunContext ctx(cfg);
    MomentOde ode(cfg.params, cfg.drive);
    const double t_end = cfg.num.t_end > 0.0 ? cfg.num.t_end : 50.0 * ode.period();
    const double dt = cfg.num.sample_dt > 0.0 ? cfg.num.sample_dt : ode.period() / 64.0;
    const auto traj = integrate(ode, vacuum_state(), t_end, cfg.num.tol, dt);

    CsvWriter csv(ctx.path("trajectory.csv"),
                  {"t", "re_a_c", "im_a_c", "re_a_t", "im_a_t", "re_b_c", "im_b_c", "re_b_t",
                   "im_b_t", "n_a_c", "n_a_t", "n_b_c", "n_b_t"});
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
        const auto& s = traj.states[k];
        csv.row({traj.times[k], s.means[0].real(), s.means[0].imag(), s.means[1].real(),
                 s.means[1].imag(), s.means[2].real(), s.means[2].imag(), s.means[3].real(),
                 s.means[3].imag(), s.normal(0, 0).real(), s.normal(1, 1).real(),
                 s.normal(2, 2).real(), s.normal(3, 3).real()});
    }
    csv.close();
    ctx.register_output("trajectory.csv");
    ctx.note("truncation_warning", traj.truncation_warning);
    ctx.write_manifest();
    out << "evolve: " << traj.states.size() << " samples to t = " << fmt17(t_end) << "\n";
    return 0;
}

struct SpectrumArtifacts {
    SteadyState steady;
    Correlation correlation;
    Spectrum spectrum;
    PeakReport peaks;
};

inline SpectrumArtifacts run_spectrum_pipeline(const SystemParams& params, const DriveConfig& drive,
                                               const NumericOptions& num,
                                               Cavity cavity = Cavity::target) {
    MomentOde ode(params, drive);
    SpectrumArtifacts art;
    art.steady = detect_steady(ode, vacuum_state(), num.tol_ss, num.max_periods,
                               num.cycle_samples, num.tol);
    const double T = num.T > 0.0 ? num.T : (params.gamma > 0.0 ? 10.0 / params.gamma : 1e4);
    art.correlation = propagate_two_time(ode, art.steady, cavity, T, num.dt, num.tol);

    std::vector<double> centers;
    for (double c = std::ceil(num.grid_lo); c <= std::floor(num.grid_hi); c += 1.0)
        centers.push_back(c);
    const auto grid = spectrum_grid(num.grid_lo, num.grid_hi, num.grid_points, centers,
                                    num.patch_half, num.patch_step);
    SpectrumOptions opt;
    opt.linewidth = num.linewidth;
    opt.hann_cumulant = num.hann;
    opt.jobs = num.jobs;
    art.spectrum = compute_spectrum(art.correlation, grid, opt);
    art.peaks = find_peaks_eta(art.spectrum, num.peak_window);
    return art;
}

inline ordered_json peaks_json(const PeakReport& report) {
    ordered_json arr = ordered_json::array();
    for (const auto& p : report.peaks) {
        ordered_json j;
        j["delta_center"] = p.delta_center;
        j["height"] = p.height;
        j["dip"] = p.dip;
        j["baseline"] = p.baseline;
        j["eta"] = p.eta;
        j["order"] = p.order;
        j["kind"] = p.kind;
        arr.push_back(j);
    }
    return arr;
}

inline int cmd_spectrum(const RunConfig& cfg, std::ostream& out) {
    RunContext ctx(cfg);
    const auto art = run_spectrum_pipeline(cfg.params, cfg.drive, cfg.num);

    CsvWriter spec_csv(ctx.path("spectrum.csv"), {"delta", "re_S", "im_S", "abs_S", "normalized"});
    for (std::size_t i = 0; i < art.spectrum.delta.size(); ++i)
        spec_csv.row({art.spectrum.delta[i], art.spectrum.values[i].real(),
                      art.spectrum.values[i].imag(), std::abs(art.spectrum.values[i]),
                      art.spectrum.normalized[i]});
    spec_csv.close();
    ctx.register_output("spectrum.csv");

    CsvWriter cum_csv(ctx.path("spectrum_cumulant.csv"),
                      {"delta", "re_S", "im_S", "abs_S", "normalized"});
    const double scale = art.spectrum.max_abs > 0.0 ? art.spectrum.max_abs : 1.0;
    for (std::size_t i = 0; i < art.spectrum.delta.size(); ++i)
        cum_csv.row({art.spectrum.delta[i], art.spectrum.cumulant_values[i].real(),
                     art.spectrum.cumulant_values[i].imag(),
                     std::abs(art.spectrum.cumulant_values[i]),
                     std::abs(art.spectrum.cumulant_values[i]) / scale});
    cum_csv.close();
    ctx.register_output("spectrum_cumulant.csv");

    write_text_file(ctx.path("peaks.json"), peaks_json(art.peaks).dump(2) + "\n");
    ctx.register_output("peaks.json");

    ordered_json conv;
    conv["converged_at"] = art.steady.converged_at;
    conv["residual"] = art.steady.residual;
    conv["periods"] = art.steady.residual_history.size();
    conv["truncation_warning"] = art.steady.truncation_warning;
    ctx.note("convergence", conv);
    ordered_json warn = ordered_json::array();
    for (const auto& w : art.spectrum.warnings) warn.push_back(w);
    ctx.note("warnings", warn);
    ctx.write_manifest();

    out << "spectrum: argmax delta = " << fmt17(art.spectrum.argmax_delta) << "\n";
    for (const auto& p : art.peaks.peaks)
        out << "  peak " << p.delta_center << " (" << p.kind << "): eta = " << fmt17(p.eta)
            << "\n";
    return 0;
}

inline int execute(RunConfig cfg, std::ostream& out, std::ostream& err) {
    try {
        resolve_model(cfg);
        if (cfg.command != Command::presets) {
            const auto diags = validate(cfg.params, cfg.drive);
            if (has_errors(diags) && cfg.command != Command::validate) {
                std::string msg = "invalid model:";
                for (const auto& d : diags)
                    if (d.severity == Severity::error) msg += " " + d.message + ";";
                throw ValidationError(msg);
            }
        }
        switch (cfg.command) {
            case Command::validate: return cmd_validate(cfg, out);
            case Command::presets: return cmd_presets(out);
            case Command::steady: return cmd_steady(cfg, out);
            case Command::sweep: return cmd_sweep(cfg, out);
            case Command::evolve: return cmd_evolve(cfg, out);
            case Command::spectrum: return cmd_spectrum(cfg, out);
        }
        return 3;
    } catch (const Error& e) {
        ordered_json j;
        j["error"] = e.code();
        j["message"] = e.what();
        err << j.dump() << "\n";
        int code = 3;
        if (e.code() == "validation" || e.code() == "ansatz") code = 1;
        else if (e.code() == "convergence" || e.code() == "singularity") code = 2;
        std::error_code ec;
        std::filesystem::create_directories(cfg.output_dir, ec);
        if (!ec) {
            try {
                write_text_file(std::filesystem::path(cfg.output_dir) / "error.json",
                                j.dump(2) + "\n");
            } catch (...) {
            }
        }
        return code;
    } catch (const std::exception& e) {
        ordered_json j;
        j["error"] = "internal";
        j["message"] = e.what();
        err << j.dump() << "\n";
        return 3;
    }
}

} // namespace omsim::run
