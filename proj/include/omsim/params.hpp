#pragma once

#include <complex>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "omsim/errors.hpp"
#include "omsim/rational.hpp"

namespace omsim {

using cplx = std::complex<double>;

enum class Cavity : std::uint8_t { controller = 0, target = 1 };

inline const char* cavity_name(Cavity c) {
    return c == Cavity::controller ? "controller" : "target";
}

// Physical rates in units of the mechanical frequency Omega0. Omega0 itself is
// kept symbolic (default 1) so the unit-rescale invariance can be tested.
// omega0 never enters the dynamics; it only labels the lab-frame axis.
struct SystemParams {
    double Omega0 = 1.0;
    double omega0 = 0.0;
    double g0 = 0.0;
    double kappa = 0.0;
    double gamma = 0.0;
    double K = 0.0;
    double Omega_c = 1.0;
    double Omega_t = 1.0;
};

struct DriveTone {
    Cavity cavity = Cavity::controller;
    cplx amplitude{0.0, 0.0};
    Rational detuning{0, 1}; // lab drive frequency = omega0 + detuning * Omega0
};

struct DriveConfig {
    std::vector<DriveTone> tones;
    Rational frame_detuning{1, 1}; // rotating frame at omega0 + frame_detuning * Omega0
};

constexpr std::int64_t kMaxDetuningDenominator = 16;

enum class Severity : std::uint8_t { error, warning };

struct Diagnostic {
    Severity severity = Severity::error;
    std::string message;
};

inline bool has_errors(const std::vector<Diagnostic>& diags) {
    for (const auto& d : diags)
        if (d.severity == Severity::error) return true;
    return false;
}

// Fundamental period of the driven system: 2*pi / (Omega0 * gcd of all nonzero
// |frame_detuning - detuning_i|), folded onto the Omega0 lattice so that cycle
// harmonic n always maps to the sideband at frame_detuning - n. Integer
// detunings give 2*pi/Omega0, half-integer ones 4*pi/Omega0.
inline double drive_period(const DriveConfig& drive, double Omega0) {
    Rational g(1, 1);
    for (const auto& tone : drive.tones)
        g = rational_gcd(g, (drive.frame_detuning - tone.detuning).abs());
    return 2.0 * std::numbers::pi / (Omega0 * g.value());
}

inline std::vector<Diagnostic> validate(const SystemParams& p, const DriveConfig& drive) {
    std::vector<Diagnostic> diags;
    auto error = [&](const std::string& m) { diags.push_back({Severity::error, m}); };
    auto warn = [&](const std::string& m) { diags.push_back({Severity::warning, m}); };

    if (p.Omega0 <= 0) error("mechanical frequency Omega0 must be positive");
    if (p.g0 < 0) error("negative optomechanical coupling g0");
    if (p.kappa < 0) error("negative damping rate kappa");
    if (p.gamma < 0) error("negative damping rate gamma");
    if (p.K < 0) error("negative mechanical coupling K");
    if (p.Omega_c <= 0 || p.Omega_t <= 0) error("per-OMS mechanical frequencies must be positive");

    // Regime checks are soft: the equations stay well-defined outside the
    // sideband-resolved window, the physics just stops matching the intent.
    if (p.kappa >= p.Omega0 && p.kappa >= 0)
        warn("sideband-resolved regime violated (kappa >= Omega0)");
    const double weak = 0.1 * p.kappa;
    if (p.kappa > 0) {
        if (p.g0 > weak) warn("weak-coupling regime violated (g0 not << kappa)");
        if (p.gamma > weak) warn("weak-coupling regime violated (gamma not << kappa)");
        if (p.K > weak) warn("weak-coupling regime violated (K not << kappa)");
    }

    for (const auto& tone : drive.tones) {
        if (tone.detuning.den > kMaxDetuningDenominator)
            error("tone detuning " + tone.detuning.str() + " exceeds denominator bound " +
                  std::to_string(kMaxDetuningDenominator));
    }
    if (drive.frame_detuning.den > kMaxDetuningDenominator)
        error("frame detuning exceeds denominator bound");
    for (std::size_t i = 0; i < drive.tones.size(); ++i) {
        for (std::size_t j = i + 1; j < drive.tones.size(); ++j) {
            if (drive.tones[i].cavity == drive.tones[j].cavity &&
                drive.tones[i].detuning == drive.tones[j].detuning)
                error(std::string("duplicate tone on ") + cavity_name(drive.tones[i].cavity) +
                      " at detuning " + drive.tones[i].detuning.str());
        }
    }
    return diags;
}

struct CooperativityResult {
    double C = 0.0;   // 4 g0^2 / (gamma kappa)
    double C_m = 0.0; // n_cav * C
};

inline CooperativityResult cooperativity(const SystemParams& p, double n_cav) {
    if (p.gamma <= 0.0 || p.kappa <= 0.0)
        throw ValidationError("cooperativity undefined for zero damping (gamma, kappa > 0 required)");
    if (n_cav < 0.0) throw ValidationError("negative cavity photon number");
    CooperativityResult r;
    r.C = 4.0 * p.g0 * p.g0 / (p.gamma * p.kappa);
    r.C_m = n_cav * r.C;
    return r;
}

// Amplitude of the tone at (cavity, detuning), zero when absent.
inline cplx tone_amplitude(const DriveConfig& drive, Cavity cavity, const Rational& detuning) {
    for (const auto& tone : drive.tones)
        if (tone.cavity == cavity && tone.detuning == detuning) return tone.amplitude;
    return {0.0, 0.0};
}

} // namespace omsim
