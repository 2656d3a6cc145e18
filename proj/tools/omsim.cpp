// Command-line front end: resolves a preset or TOML config, runs the
// analytic/numeric pipelines, and emits CSV/JSON artifacts plus a manifest.

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "omsim/run.hpp"

namespace {

struct CommonArgs {
    std::string preset;
    std::string config;
    std::vector<std::string> sets;
    std::string output;
    unsigned jobs = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--preset", args.preset, "named preset from the catalog");
    cmd->add_option("--config", args.config, "TOML config file")->check(CLI::ExistingFile);
    cmd->add_option("--set", args.sets, "override key=value after preset/config resolution");
    cmd->add_option("-o,--output", args.output,
                    "output directory (default: $OMSIM_OUTPUT_DIR or '.')");
    cmd->add_option("--jobs", args.jobs, "worker pool size (default: hardware)");
}

bool parse_range(const std::string& text, double& lo, double& hi, int& n) {
    const auto c1 = text.find(':');
    const auto c2 = text.rfind(':');
    if (c1 == std::string::npos || c2 == c1) return false;
    try {
        lo = std::stod(text.substr(0, c1));
        hi = std::stod(text.substr(c1 + 1, c2 - c1 - 1));
        n = std::stoi(text.substr(c2 + 1));
    } catch (const std::exception&) {
        return false;
    }
    return n >= 1;
}

int run_command(omsim::run::Command command, const CommonArgs& args,
                const std::function<void(omsim::run::RunConfig&)>& tweak = nullptr) {
    omsim::run::RunConfig cfg;
    cfg.command = command;
    try {
        if (!args.preset.empty()) cfg.preset_name = args.preset;
        if (const char* env = std::getenv("OMSIM_OUTPUT_DIR"); env && *env)
            cfg.output_dir = env; // overridden by a config file or -o below
        if (!args.config.empty()) omsim::run::load_config_file(cfg, args.config);
        if (!args.output.empty()) cfg.output_dir = args.output;
        cfg.num.jobs = args.jobs;
        omsim::run::resolve_model(cfg);
        for (const auto& kv : args.sets) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos)
                throw omsim::ValidationError("--set expects key=value, got '" + kv + "'");
            omsim::run::apply_override(cfg, kv.substr(0, eq), kv.substr(eq + 1));
        }
        if (tweak) tweak(cfg);
    } catch (const omsim::Error& e) {
        omsim::ordered_json j;
        j["error"] = e.code();
        j["message"] = e.what();
        std::cerr << j.dump() << "\n";
        return e.code() == "io" ? 3 : 1;
    }
    return omsim::run::execute(std::move(cfg), std::cout, std::cerr);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"simulator for mechanically coupled, optically isolated optomechanical systems"};
    app.require_subcommand(1);

    CommonArgs common;

    auto* validate = app.add_subcommand("validate", "check parameters and drive configuration");
    add_common(validate, common);

    auto* presets = app.add_subcommand("presets", "list the preset catalog");

    auto* steady = app.add_subcommand(
        "steady", "analytic sideband amplitudes (closed form + linear-solve oracle)");
    add_common(steady, common);

    auto* sweep = app.add_subcommand("sweep", "|<a_t0>| over a gamma-K grid with ridge");
    add_common(sweep, common);
    std::string gamma_range = "1e-4:1e-3:40";
    std::string K_range = "0:1e-3:60";
    sweep->add_option("--gamma-range", gamma_range, "lo:hi:n (default 1e-4:1e-3:40)");
    sweep->add_option("--K-range", K_range, "lo:hi:n (default 0:1e-3:60)");

    auto* evolve = app.add_subcommand("evolve", "time evolution from vacuum, trajectory CSV");
    add_common(evolve, common);
    double t_end = 0.0, sample_dt = 0.0, evolve_tol = 0.0;
    evolve->add_option("--t-end", t_end, "integration horizon (default 50 periods)");
    evolve->add_option("--sample-dt", sample_dt, "sampling step (default period/64)");
    evolve->add_option("--tol", evolve_tol, "integrator relative tolerance");

    auto* spectrum = app.add_subcommand(
        "spectrum", "steady state -> two-time correlation -> output power spectrum + peaks");
    add_common(spectrum, common);
    double T = 0.0, dt = 0.0, tol = 0.0, tol_ss = 0.0, window = 0.0, linewidth = 0.0;
    std::string grid;
    bool hann = false;
    spectrum->add_option("--T", T, "correlation window (default 10/gamma)");
    spectrum->add_option("--dt", dt, "correlation sample step (default 0.125)");
    spectrum->add_option("--tol", tol, "integrator relative tolerance (default 1e-9)");
    spectrum->add_option("--tol-ss", tol_ss, "steady-state residual tolerance (default 1e-9)");
    spectrum->add_option("--grid", grid, "spectrum grid lo:hi:n (default -1.5:3.5:4001)");
    spectrum->add_option("--window", window, "peak search half-width (default 0.01)");
    spectrum->add_option("--linewidth", linewidth,
                         "Lorentzian linewidth floor of coherent lines (default 2e-5)");
    spectrum->add_flag("--hann", hann, "taper the cumulant part with a half-Hann window");

    CLI11_PARSE(app, argc, argv);

    if (presets->parsed()) return run_command(omsim::run::Command::presets, common);
    if (validate->parsed()) return run_command(omsim::run::Command::validate, common);
    if (steady->parsed()) return run_command(omsim::run::Command::steady, common);
    if (sweep->parsed()) {
        return run_command(omsim::run::Command::sweep, common,
                           [&](omsim::run::RunConfig& cfg) {
                               if (!parse_range(gamma_range, cfg.num.gamma_lo, cfg.num.gamma_hi,
                                                cfg.num.gamma_n))
                                   throw omsim::ValidationError("bad --gamma-range " + gamma_range);
                               if (!parse_range(K_range, cfg.num.K_lo, cfg.num.K_hi, cfg.num.K_n))
                                   throw omsim::ValidationError("bad --K-range " + K_range);
                           });
    }
    if (evolve->parsed()) {
        return run_command(omsim::run::Command::evolve, common,
                           [&](omsim::run::RunConfig& cfg) {
                               if (t_end > 0.0) cfg.num.t_end = t_end;
                               if (sample_dt > 0.0) cfg.num.sample_dt = sample_dt;
                               if (evolve_tol > 0.0) cfg.num.tol = evolve_tol;
                           });
    }
    if (spectrum->parsed()) {
        return run_command(omsim::run::Command::spectrum, common,
                           [&](omsim::run::RunConfig& cfg) {
                               if (T > 0.0) cfg.num.T = T;
                               if (dt > 0.0) cfg.num.dt = dt;
                               if (tol > 0.0) cfg.num.tol = tol;
                               if (tol_ss > 0.0) cfg.num.tol_ss = tol_ss;
                               if (window > 0.0) cfg.num.peak_window = window;
                               if (linewidth > 0.0) cfg.num.linewidth = linewidth;
                               if (hann) cfg.num.hann = true;
                               if (!grid.empty() &&
                                   !parse_range(grid, cfg.num.grid_lo, cfg.num.grid_hi,
                                                cfg.num.grid_points))
                                   throw omsim::ValidationError("bad --grid " + grid);
                           });
    }
    return 0;
}
