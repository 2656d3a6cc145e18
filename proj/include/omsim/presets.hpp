#pragma once

#include <string>
#include <vector>

#include "omsim/params.hpp"

namespace omsim {

struct ExperimentPreset {
    std::string name;
    SystemParams params;
    DriveConfig drive;
    std::string notes;
};

namespace detail {

inline ExperimentPreset make_preset(std::string name, double K,
                                    std::vector<DriveTone> tones, std::string notes) {
    ExperimentPreset p;
    p.name = std::move(name);
    p.params.Omega0 = 1.0;
    p.params.kappa = 0.23;
    p.params.g0 = 2.4e-4;
    p.params.gamma = 4.7e-4;
    p.params.K = K;
    p.drive.tones = std::move(tones);
    p.drive.frame_detuning = Rational(1, 1);
    p.notes = std::move(notes);
    return p;
}

inline DriveTone ctone(Rational xi, double E) { return {Cavity::controller, cplx(E, 0.0), xi}; }
inline DriveTone ttone(Rational xi, double E) { return {Cavity::target, cplx(E, 0.0), xi}; }

} // namespace detail

inline const std::vector<ExperimentPreset>& preset_catalog() {
    using detail::ctone;
    using detail::make_preset;
    using detail::ttone;
    static const double K0 = 2.35e-4;
    static const std::vector<ExperimentPreset> catalog = {
        make_preset("fig2_red", 0.0, {ttone({1, 1}, 1.0)},
                    "uncoupled reference: blue-detuned target probe only"),
        make_preset("fig2_green", K0, {ttone({1, 1}, 1.0), ctone({1, 1}, 4.0)},
                    "strong blue-detuned monotone controller drive"),
        make_preset("fig2_orange", K0, {ttone({1, 1}, 1.0), ctone({0, 1}, 1.0)},
                    "resonant monotone controller drive"),
        make_preset("fig2_blue", K0, {ttone({1, 1}, 1.0), ctone({0, 1}, 1.0), ctone({1, 1}, 1.0)},
                    "two-tone controller drive (resonant + blue-detuned)"),
        make_preset("fig2b_black", 0.0, {ttone({0, 1}, 1.0)},
                    "uncoupled, resonant target probe"),
        make_preset("fig3_orange", K0,
                    {ttone({2, 1}, 1.0), ctone({0, 1}, 1.0), ctone({1, 1}, 1.0)},
                    "doubly blue-detuned target probe, two-tone controller drive"),
        make_preset("fig3_purple", K0,
                    {ttone({1, 1}, 1.0), ctone({0, 1}, 1.0), ctone({1, 1}, 1.0)},
                    "blue-detuned target probe, two-tone controller drive"),
        make_preset("fig3_green", K0,
                    {ttone({0, 1}, 1.0), ctone({0, 1}, 1.0), ctone({1, 1}, 1.0)},
                    "resonant target probe, two-tone controller drive"),
        make_preset("fig3_red", K0,
                    {ttone({-1, 1}, 1.0), ctone({0, 1}, 1.0), ctone({1, 1}, 1.0)},
                    "red-detuned target probe, two-tone controller drive"),
        make_preset("fig3_blue", K0,
                    {ttone({1, 1}, 1.0), ctone({-1, 1}, 1.0), ctone({1, 1}, 1.0)},
                    "controller tones split by 2*Omega0 (ineffective beat)"),
        make_preset("fig3_yellow", K0,
                    {ttone({1, 1}, 1.0), ctone({-1, 2}, 1.0), ctone({1, 2}, 1.0)},
                    "half-detuned controller tones, beat at Omega0"),
    };
    return catalog;
}

inline std::vector<std::string> preset_names() {
    std::vector<std::string> names;
    for (const auto& p : preset_catalog()) names.push_back(p.name);
    return names;
}

inline const ExperimentPreset& preset(const std::string& name) {
    for (const auto& p : preset_catalog())
        if (p.name == name) return p;
    std::string msg = "unknown preset '" + name + "'; available:";
    for (const auto& p : preset_catalog()) msg += " " + p.name;
    throw ValidationError(msg);
}

} // namespace omsim
