#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "omsim/errors.hpp"
#include "omsim/parallel.hpp"
#include "omsim/params.hpp"

namespace omsim {

// Steady-state sideband amplitudes of the linearized three-tone configuration:
// controller driven at resonance and +Omega0, target probed at +Omega0.
struct SidebandSolution {
    // bare input amplitudes
    cplx a_c0_bar{};
    cplx a_cp_bar{};
    cplx a_tp_bar{};
    // effective couplings
    cplx g_cc_bar{};
    cplx g_c_bar{};
    cplx g_t_bar{};
    cplx zeta{};
    // induced sideband amplitudes (valid when sidebands_solved)
    cplx a_t0{};
    cplx a_cm{};
    cplx b_c{};
    cplx b_t{};
    bool sidebands_solved = false;
};

namespace detail {

// Denominators below this magnitude (internal units) are reported, never inverted.
constexpr double kSingularFloor = 1e-14;

inline void check_ansatz_pattern(const DriveConfig& drive) {
    for (const auto& tone : drive.tones) {
        const bool ok =
            (tone.cavity == Cavity::controller &&
             (tone.detuning == Rational(0, 1) || tone.detuning == Rational(1, 1))) ||
            (tone.cavity == Cavity::target && tone.detuning == Rational(1, 1));
        if (!ok)
            throw AnsatzError("ansatz requires (c:0, c:+1, t:+1) tones; found " +
                              std::string(cavity_name(tone.cavity)) + " tone at detuning " +
                              tone.detuning.str());
    }
}

inline std::string describe_params(const SystemParams& p) {
    std::ostringstream os;
    os << "kappa=" << p.kappa << " gamma=" << p.gamma << " g0=" << p.g0 << " K=" << p.K;
    return os.str();
}

} // namespace detail

inline SidebandSolution bare_amplitudes(const SystemParams& p, const DriveConfig& drive) {
    detail::check_ansatz_pattern(drive);
    const cplx i1(0.0, 1.0);
    const double half_kappa = 0.5 * p.kappa;
    if (half_kappa < detail::kSingularFloor)
        throw SingularityError("bare amplitudes undefined for kappa -> 0 (" +
                               detail::describe_params(p) + ")");
    const cplx E_c0 = tone_amplitude(drive, Cavity::controller, Rational(0, 1));
    const cplx E_cp = tone_amplitude(drive, Cavity::controller, Rational(1, 1));
    const cplx E_tp = tone_amplitude(drive, Cavity::target, Rational(1, 1));

    SidebandSolution s;
    s.a_c0_bar = E_c0 / half_kappa;
    s.a_cp_bar = E_cp / (half_kappa - i1 * p.Omega0);
    s.a_tp_bar = E_tp / (half_kappa - i1 * p.Omega0);
    s.g_cc_bar = p.g0 * std::conj(s.a_c0_bar) * s.a_cp_bar;
    s.g_c_bar = p.g0 * s.a_c0_bar;
    s.g_t_bar = p.g0 * s.a_tp_bar;
    s.zeta = 0.5 * p.gamma - std::norm(s.g_c_bar) / (half_kappa + i1 * p.Omega0);
    return s;
}

inline SidebandSolution stokes_closed_form(const SystemParams& p, const DriveConfig& drive) {
    SidebandSolution s = bare_amplitudes(p, drive);
    const cplx i1(0.0, 1.0);
    const double half_kappa = 0.5 * p.kappa;
    const double half_gamma = 0.5 * p.gamma;

    const cplx zeta_t = half_gamma - std::norm(s.g_t_bar) / half_kappa;
    const cplx denom = s.zeta * std::norm(s.g_t_bar) -
                       half_kappa * (p.K * p.K + s.zeta * half_gamma);
    if (std::abs(denom) < detail::kSingularFloor)
        throw SingularityError("vanishing sideband denominator (" + detail::describe_params(p) +
                               ")");
    s.a_t0 = i1 * s.g_t_bar * std::conj(s.g_cc_bar) * p.K / denom;

    // Back-substitution: the daggered phonon pair first, then the optical
    // amplitudes from their own steady-state equations.
    const cplx pair_denom = s.zeta * zeta_t + p.K * p.K;
    if (std::abs(pair_denom) < detail::kSingularFloor)
        throw SingularityError("vanishing phonon-pair denominator (" + detail::describe_params(p) +
                               ")");
    const cplx b_c_dag = -i1 * std::conj(s.g_cc_bar) * zeta_t / pair_denom;
    const cplx b_t_dag = -p.K * std::conj(s.g_cc_bar) / pair_denom;
    s.b_c = std::conj(b_c_dag);
    s.b_t = std::conj(b_t_dag);
    s.a_cm = i1 * s.g_c_bar * b_c_dag / (i1 * p.Omega0 + half_kappa);
    s.sidebands_solved = true;
    return s;
}

// Independent oracle: the same steady state from the 4x4 complex linear system
// in the unknowns (<a_{c,-}>, <a_{t,0}>, <b_c^dag>, <b_t^dag>).
inline SidebandSolution stokes_linear_solve(const SystemParams& p, const DriveConfig& drive) {
    SidebandSolution s = bare_amplitudes(p, drive);
    const cplx i1(0.0, 1.0);
    const double half_kappa = 0.5 * p.kappa;
    const double half_gamma = 0.5 * p.gamma;

    Eigen::Matrix4cd M = Eigen::Matrix4cd::Zero();
    Eigen::Vector4cd rhs = Eigen::Vector4cd::Zero();
    // d<a_{c,-}>/dt = 0
    M(0, 0) = -i1 * p.Omega0 - half_kappa;
    M(0, 2) = i1 * s.g_c_bar;
    // d<a_{t,0}>/dt = 0
    M(1, 1) = -half_kappa;
    M(1, 3) = i1 * s.g_t_bar;
    // d<b_c^dag>/dt = 0
    M(2, 0) = -i1 * std::conj(s.g_c_bar);
    M(2, 2) = -half_gamma;
    M(2, 3) = -i1 * p.K;
    rhs(2) = i1 * std::conj(s.g_cc_bar);
    // d<b_t^dag>/dt = 0
    M(3, 1) = -i1 * std::conj(s.g_t_bar);
    M(3, 2) = -i1 * p.K;
    M(3, 3) = -half_gamma;

    Eigen::FullPivLU<Eigen::Matrix4cd> lu(M);
    if (!lu.isInvertible() || std::abs(lu.determinant()) < detail::kSingularFloor)
        throw SingularityError("singular sideband system (" + detail::describe_params(p) + ")");
    const Eigen::Vector4cd u = lu.solve(rhs);

    s.a_cm = u(0);
    s.a_t0 = u(1);
    s.b_c = std::conj(u(2));
    s.b_t = std::conj(u(3));
    s.sidebands_solved = true;
    return s;
}

struct RidgePoint {
    double gamma = 0.0;
    double K_star = 0.0;
    double magnitude = 0.0;
};

struct SweepGrid {
    std::vector<double> gamma_values;
    std::vector<double> K_values;
    std::vector<double> magnitude; // row-major [i_gamma * nK + i_K]; NaN marks masked cells
    std::vector<RidgePoint> ridge;

    double at(std::size_t i_gamma, std::size_t i_K) const {
        return magnitude[i_gamma * K_values.size() + i_K];
    }
};

namespace detail {

template <typename F>
double golden_max(F&& f, double lo, double hi, double rel_tol) {
    constexpr double inv_phi = 0.6180339887498949;
    double a = lo, b = hi;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while ((b - a) > rel_tol * std::max(1e-300, std::abs(a) + std::abs(b))) {
        if (f1 < f2) {
            a = x1; x1 = x2; f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        } else {
            b = x2; x2 = x1; f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        }
    }
    return 0.5 * (a + b);
}

} // namespace detail

struct OptimalK {
    double K_star = 0.0;
    double magnitude = 0.0;
    bool scan_fallback = false; // golden-section bracket was not unimodal
};

inline OptimalK optimal_K(const SystemParams& base, const DriveConfig& drive, double gamma) {
    if (gamma <= 0.0) throw ValidationError("optimal_K requires gamma > 0");
    auto objective = [&](double K) -> double {
        SystemParams p = base;
        p.gamma = gamma;
        p.K = K;
        try {
            return std::abs(stokes_closed_form(p, drive).a_t0);
        } catch (const SingularityError&) {
            return -1.0;
        }
    };
    const double hi = 10.0 * gamma;
    OptimalK result;
    result.K_star = detail::golden_max(objective, 0.0, hi, 1e-6);
    result.magnitude = objective(result.K_star);

    // Guard against a non-unimodal objective: a coarse scan must not beat the
    // golden-section optimum by more than roundoff.
    constexpr int kScan = 128;
    double best_scan = -1.0, best_scan_K = 0.0;
    for (int i = 0; i <= kScan; ++i) {
        const double K = hi * static_cast<double>(i) / kScan;
        const double v = objective(K);
        if (v > best_scan) { best_scan = v; best_scan_K = K; }
    }
    if (best_scan > result.magnitude * (1.0 + 1e-9)) {
        result.scan_fallback = true;
        const double lo = std::max(0.0, best_scan_K - hi / kScan);
        const double up = std::min(hi, best_scan_K + hi / kScan);
        result.K_star = detail::golden_max(objective, lo, up, 1e-6);
        result.magnitude = objective(result.K_star);
    }
    return result;
}

inline SweepGrid sweep_gamma_K(const SystemParams& base, const DriveConfig& drive,
                               const std::vector<double>& gammas, const std::vector<double>& Ks,
                               unsigned jobs = 0) {
    if (gammas.empty() || Ks.empty()) throw ValidationError("empty sweep range");
    if (!std::is_sorted(gammas.begin(), gammas.end()) || gammas.front() <= 0.0)
        throw ValidationError("gamma values must be positive and sorted");
    if (!std::is_sorted(Ks.begin(), Ks.end()) || Ks.front() < 0.0)
        throw ValidationError("K values must be nonnegative and sorted");

    SweepGrid grid;
    grid.gamma_values = gammas;
    grid.K_values = Ks;
    grid.magnitude.assign(gammas.size() * Ks.size(), 0.0);
    grid.ridge.resize(gammas.size());

    parallel_for(gammas.size(), [&](std::size_t ig) {
        SystemParams p = base;
        p.gamma = gammas[ig];
        std::size_t best = 0;
        double best_mag = -1.0;
        for (std::size_t ik = 0; ik < Ks.size(); ++ik) {
            p.K = Ks[ik];
            double mag;
            try {
                mag = std::abs(stokes_closed_form(p, drive).a_t0);
            } catch (const SingularityError&) {
                mag = std::numeric_limits<double>::quiet_NaN();
            }
            grid.magnitude[ig * Ks.size() + ik] = mag;
            if (!std::isnan(mag) && mag > best_mag) { best_mag = mag; best = ik; }
        }
        // Refine the per-gamma maximizer inside the bracketing grid cells.
        auto objective = [&](double K) -> double {
            SystemParams q = base;
            q.gamma = gammas[ig];
            q.K = K;
            try {
                return std::abs(stokes_closed_form(q, drive).a_t0);
            } catch (const SingularityError&) {
                return -1.0;
            }
        };
        const double lo = best > 0 ? Ks[best - 1] : Ks[best];
        const double hi = best + 1 < Ks.size() ? Ks[best + 1] : Ks[best];
        double K_star = Ks[best];
        if (hi > lo) K_star = detail::golden_max(objective, lo, hi, 1e-9);
        grid.ridge[ig] = {gammas[ig], K_star, objective(K_star)};
    }, jobs);
    return grid;
}

} // namespace omsim
