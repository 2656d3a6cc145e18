#pragma once

// Output power spectrum on the lab detuning axis (omega = omega0 + delta *
// Omega0). The transform kernel is e^{+i omega_frame tau} with omega_frame =
// (delta - frame_detuning) * Omega0, which places each drive tone at its own
// detuning, the Stokes line of a +1 probe at delta = 0 and its anti-Stokes
// line at delta = +2.
//
// The two parts of C(tau) are transformed by different routes. The periodic
// (factorized) part is an exact harmonic comb of the converged limit cycle, so
// its transform is evaluated in closed form with a Lorentzian linewidth floor
// per line: a hard finite-window cutoff would bury the weak inelastic features
// under sinc leakage that oscillates across the whole axis. The decaying
// cumulant part is integrated numerically by the trapezoid rule; its features
// carry their natural widths (>= gamma/2 >> linewidth floor).

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "omsim/parallel.hpp"
#include "omsim/two_time.hpp"

namespace omsim {

struct SpectrumOptions {
    double linewidth = 2e-5;  // Lorentzian floor of the coherent comb, units of Omega0
    bool hann_cumulant = false; // optional Hann window on the cumulant part
    unsigned jobs = 0;
};

struct Spectrum {
    std::vector<double> delta;
    std::vector<cplx> values;          // total S(delta)
    std::vector<cplx> cumulant_values; // transform of the cumulant part alone
    std::vector<double> normalized;    // |S| / max |S|
    double max_abs = 0.0;
    double argmax_delta = 0.0;
    double linewidth = 0.0;
    std::vector<double> tone_detunings; // measured-cavity tones, for peak labeling
    double gamma = 0.0;
    std::vector<std::string> warnings;
};

// Uniform base grid plus dense symmetric patches around the candidate feature
// centers (patch points include the centers exactly).
inline std::vector<double> spectrum_grid(double lo = -1.5, double hi = 3.5, int base_points = 4001,
                                         const std::vector<double>& centers = {},
                                         double patch_half_width = 0.05,
                                         double patch_step = 5e-5) {
    if (base_points < 2 || hi <= lo) throw ValidationError("spectrum_grid: bad range");
    std::vector<double> grid;
    grid.reserve(base_points);
    for (int i = 0; i < base_points; ++i)
        grid.push_back(lo + (hi - lo) * i / static_cast<double>(base_points - 1));
    for (const double c : centers) {
        const int half = static_cast<int>(std::round(patch_half_width / patch_step));
        for (int k = -half; k <= half; ++k) {
            const double d = c + k * patch_step;
            if (d >= lo && d <= hi) grid.push_back(d);
        }
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end(),
                           [](double a, double b) { return std::abs(a - b) < 1e-12; }),
               grid.end());
    return grid;
}

inline Spectrum compute_spectrum(const Correlation& corr, const std::vector<double>& grid,
                                 const SpectrumOptions& options = {}) {
    if (grid.size() < 2) throw ValidationError("compute_spectrum: grid too small");
    if (!std::is_sorted(grid.begin(), grid.end()))
        throw ValidationError("compute_spectrum: grid must be sorted");
    if (options.linewidth <= 0.0) throw ValidationError("compute_spectrum: linewidth must be > 0");

    Spectrum spec;
    spec.delta = grid;
    spec.values.resize(grid.size());
    spec.cumulant_values.resize(grid.size());
    spec.normalized.resize(grid.size());
    spec.linewidth = options.linewidth;
    spec.tone_detunings = corr.tone_detunings;
    spec.gamma = corr.gamma;

    if (grid.front() > -1.0 || grid.back() < 3.0)
        spec.warnings.push_back("grid does not cover delta in [-1, 3]");
    // Feature resolution check around the integer candidates.
    const double feature_width = corr.gamma > 0.0 ? 0.5 * corr.gamma / corr.Omega0 : 0.0;
    if (feature_width > 0.0) {
        bool coarse = false;
        for (double c = std::ceil(grid.front()); c <= std::floor(grid.back()); c += 1.0) {
            const auto it = std::lower_bound(grid.begin(), grid.end(), c);
            if (it != grid.begin() && it != grid.end() && *(it) - *(it - 1) > feature_width)
                coarse = true;
        }
        if (coarse)
            spec.warnings.push_back(
                "grid spacing near integer candidates is coarser than gamma/(2 Omega0)");
    }

    const double omega_p = 2.0 * std::numbers::pi / corr.period;
    const double eps = options.linewidth * corr.Omega0;
    const std::size_t n_tau = corr.cumulant_part.size();
    const cplx i1(0.0, 1.0);

    parallel_for(grid.size(), [&](std::size_t gi) {
        const double omega_frame = (grid[gi] - corr.frame_detuning) * corr.Omega0;

        // Coherent comb in closed form: sum_n conj(mbar) c_n / (eps - i(omega_frame + n omega_p)).
        cplx coherent{0.0, 0.0};
        for (int n = -corr.harmonic_span; n <= corr.harmonic_span; ++n) {
            const cplx c_n = corr.mean_harmonics[n + corr.harmonic_span];
            coherent += corr.mean_conj0 * c_n / (eps - i1 * (omega_frame + n * omega_p));
        }

        // Cumulant part by trapezoid with incremental phase rotation.
        cplx acc{0.0, 0.0};
        const cplx rot_step = std::polar(1.0, omega_frame * corr.dt);
        cplx rot{1.0, 0.0};
        for (std::size_t k = 0; k < n_tau; ++k) {
            double w = (k == 0 || k == n_tau - 1) ? 0.5 : 1.0;
            if (options.hann_cumulant) {
                const double x = static_cast<double>(k) / static_cast<double>(n_tau - 1);
                w *= 0.5 * (1.0 + std::cos(std::numbers::pi * x)); // half-Hann taper
            }
            acc += w * corr.cumulant_part[k] * rot;
            rot *= rot_step;
            if ((k & 0x0fff) == 0x0fff) rot /= std::abs(rot);
        }
        spec.cumulant_values[gi] = acc * corr.dt;
        spec.values[gi] = coherent + spec.cumulant_values[gi];
    }, options.jobs);

    std::size_t argmax = 0;
    for (std::size_t gi = 0; gi < grid.size(); ++gi)
        if (std::abs(spec.values[gi]) > std::abs(spec.values[argmax])) argmax = gi;
    spec.max_abs = std::abs(spec.values[argmax]);
    spec.argmax_delta = grid[argmax];
    const double scale = spec.max_abs > 0.0 ? spec.max_abs : 1.0;
    for (std::size_t gi = 0; gi < grid.size(); ++gi)
        spec.normalized[gi] = std::abs(spec.values[gi]) / scale;
    return spec;
}

struct Peak {
    double delta_center = 0.0;
    double height = 0.0;   // max |S~| within the window
    double dip = 0.0;      // min |S~| within the window (Fano signature)
    double baseline = 0.0; // median |S~| in the annulus [2w, 4w]
    double eta = 0.0;      // height / baseline
    int order = 0;         // delta = order + 1
    std::string kind;      // drive | stokes | anti_stokes | sideband
};

struct PeakReport {
    std::vector<Peak> peaks;

    const Peak* at(double delta_center) const {
        for (const auto& p : peaks)
            if (std::abs(p.delta_center - delta_center) < 1e-9) return &p;
        return nullptr;
    }
};

inline PeakReport find_peaks_eta(const Spectrum& spec, double window) {
    if (window <= 0.0) throw ValidationError("find_peaks_eta: window must be positive");
    if (spec.normalized.empty()) throw ValidationError("find_peaks_eta: empty spectrum");

    // Candidate centers: the integer comb plus the measured cavity's drive
    // tones and their first Stokes/anti-Stokes companions.
    std::vector<double> centers;
    for (double c = std::ceil(spec.delta.front()); c <= std::floor(spec.delta.back()); c += 1.0)
        centers.push_back(c);
    for (const double xi : spec.tone_detunings)
        for (const double c : {xi - 1.0, xi, xi + 1.0}) centers.push_back(c);
    std::sort(centers.begin(), centers.end());
    centers.erase(std::unique(centers.begin(), centers.end(),
                              [](double a, double b) { return std::abs(a - b) < 1e-9; }),
                  centers.end());

    auto classify = [&](double c) -> std::string {
        for (const double xi : spec.tone_detunings)
            if (std::abs(c - xi) < 1e-9) return "drive";
        for (const double xi : spec.tone_detunings)
            if (std::abs(c - (xi - 1.0)) < 1e-9) return "stokes";
        for (const double xi : spec.tone_detunings)
            if (std::abs(c - (xi + 1.0)) < 1e-9) return "anti_stokes";
        return "sideband";
    };

    PeakReport report;
    for (const double c : centers) {
        double height = 0.0, dip = std::numeric_limits<double>::infinity();
        std::vector<double> annulus;
        bool in_window = false;
        for (std::size_t i = 0; i < spec.delta.size(); ++i) {
            const double d = std::abs(spec.delta[i] - c);
            if (d <= window) {
                height = std::max(height, spec.normalized[i]);
                dip = std::min(dip, spec.normalized[i]);
                in_window = true;
            } else if (d >= 2.0 * window && d <= 4.0 * window) {
                annulus.push_back(spec.normalized[i]);
            }
        }
        if (!in_window || annulus.empty()) continue;
        std::nth_element(annulus.begin(), annulus.begin() + annulus.size() / 2, annulus.end());
        const double baseline = annulus[annulus.size() / 2];
        if (baseline <= 0.0) continue;
        Peak p;
        p.delta_center = c;
        p.height = height;
        p.dip = dip;
        p.baseline = baseline;
        p.eta = height / baseline;
        p.order = static_cast<int>(std::llround(c)) - 1;
        p.kind = classify(c);
        report.peaks.push_back(p);
    }
    return report;
}

} // namespace omsim
