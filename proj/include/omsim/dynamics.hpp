#pragma once

// Time evolution of the moment ODE: adaptive integration, stroboscopic
// limit-cycle detection, and Fourier components of the converged cycle.

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>
#include <vector>

#include "omsim/moment_system.hpp"
#include "omsim/params.hpp"
#include "omsim/rk45.hpp"

namespace omsim {

struct Trajectory {
    std::vector<double> times;
    std::vector<CumulantState> states;
    bool dense = false;               // sampled on a uniform grid vs. accepted steps
    bool truncation_warning = false;  // some diagonal cumulant dipped below -1e-6
};

namespace detail {

struct MomentRhs {
    const MomentOde* ode;
    void operator()(double t, const double* y, double* dy) const { ode->eval_packed(t, y, dy); }
};

inline bool diag_negative(const double* y) {
    for (int i = 0; i < 4; ++i)
        if (y[8 + i] < -1e-6) return true;
    return false;
}

} // namespace detail

inline Trajectory integrate(const MomentOde& ode, const CumulantState& initial, double t_end,
                            double tol, double sample_dt = 0.0) {
    if (t_end <= initial.t) throw ValidationError("integrate: t_end must exceed initial time");
    if (tol <= 0.0) throw ValidationError("integrate: tolerance must be positive");

    Rk45Options opt;
    opt.rtol = tol;
    opt.atol = tol * 1e-3;
    Rk45<detail::MomentRhs> rk({&ode}, packed::kMomentDim, opt);
    std::array<double, packed::kMomentDim> y0{};
    packed::pack(initial, y0.data());
    rk.set_state(initial.t, y0.data());

    Trajectory traj;
    traj.dense = sample_dt > 0.0;
    traj.times.push_back(initial.t);
    traj.states.push_back(initial);

    std::array<double, packed::kMomentDim> ybuf{};
    if (traj.dense) {
        double next = initial.t + sample_dt;
        rk.integrate_to(t_end, [&](const DenseStep& step) {
            const double t1 = step.t0 + step.h;
            const double eps = 1e-9 * std::max(1.0, std::abs(t1));
            while (next <= t1 + eps && next <= t_end + eps) {
                step.eval(std::min(next, t_end), ybuf.data());
                traj.times.push_back(next);
                traj.states.push_back(packed::unpack(ybuf.data(), next));
                if (detail::diag_negative(ybuf.data())) traj.truncation_warning = true;
                next += sample_dt;
            }
        });
    } else {
        rk.integrate_to(t_end, [&](const DenseStep& step) {
            const double t1 = step.t0 + step.h;
            step.eval(t1, ybuf.data());
            traj.times.push_back(t1);
            traj.states.push_back(packed::unpack(ybuf.data(), t1));
            if (detail::diag_negative(ybuf.data())) traj.truncation_warning = true;
        });
    }
    return traj;
}

// Final state only, no trajectory storage.
inline CumulantState advance(const MomentOde& ode, const CumulantState& initial, double t_end,
                             double tol) {
    if (t_end <= initial.t) throw ValidationError("advance: t_end must exceed initial time");
    Rk45Options opt;
    opt.rtol = tol;
    opt.atol = tol * 1e-3;
    Rk45<detail::MomentRhs> rk({&ode}, packed::kMomentDim, opt);
    std::array<double, packed::kMomentDim> y{};
    packed::pack(initial, y.data());
    rk.set_state(initial.t, y.data());
    rk.integrate_to(t_end);
    return packed::unpack(rk.state().data(), rk.time());
}

struct SteadyState {
    std::vector<CumulantState> cycle; // one period on a uniform grid, cycle[k] at phase k/M
    double period = 0.0;
    std::array<cplx, 4> period_mean{}; // per-operator period-averaged means
    double converged_at = 0.0;
    double residual = 0.0;
    std::vector<double> residual_history;
    bool truncation_warning = false;
};

// Integrates period-by-period from `initial` and declares convergence when the
// relative L2 distance between consecutive stroboscopic snapshots stays below
// tol_ss for 5 consecutive periods, then stores one converged cycle.
inline SteadyState detect_steady(const MomentOde& ode, const CumulantState& initial,
                                 double tol_ss, int max_periods, int cycle_samples = 512,
                                 double tol = 1e-9) {
    if (tol_ss <= 0.0) throw ValidationError("detect_steady: tol_ss must be positive");
    if (max_periods < 6) throw ValidationError("detect_steady: max_periods too small");

    const double P = ode.period();
    Rk45Options opt;
    opt.rtol = tol;
    opt.atol = tol * 1e-3;
    Rk45<detail::MomentRhs> rk({&ode}, packed::kMomentDim, opt);
    std::array<double, packed::kMomentDim> y{};
    packed::pack(initial, y.data());
    rk.set_state(initial.t, y.data());

    SteadyState ss;
    ss.period = P;

    std::array<double, packed::kMomentDim> prev = y;
    int consecutive = 0;
    bool truncation = false;
    int n = 0;
    for (; n < max_periods; ++n) {
        rk.integrate_to(initial.t + (n + 1) * P);
        const auto& cur = rk.state();
        double diff_sq = 0.0, norm_sq = 0.0;
        for (int i = 0; i < packed::kMomentDim; ++i) {
            const double d = cur[i] - prev[i];
            diff_sq += d * d;
            norm_sq += cur[i] * cur[i];
        }
        const double residual =
            norm_sq > 0.0 ? std::sqrt(diff_sq / norm_sq) : std::sqrt(diff_sq);
        ss.residual_history.push_back(residual);
        if (detail::diag_negative(cur.data())) truncation = true;
        std::copy(cur.begin(), cur.end(), prev.begin());
        if (residual < tol_ss) {
            if (++consecutive >= 5) break;
        } else {
            consecutive = 0;
        }
    }
    if (consecutive < 5) {
        std::ostringstream os;
        os << "no steady state within " << max_periods << " periods (last residuals:";
        const std::size_t nh = ss.residual_history.size();
        for (std::size_t k = nh > 5 ? nh - 5 : 0; k < nh; ++k)
            os << " " << ss.residual_history[k];
        os << ")";
        throw ConvergenceError(os.str());
    }

    ss.converged_at = rk.time();
    ss.residual = ss.residual_history.back();
    ss.truncation_warning = truncation;

    // Store one full cycle on a uniform grid (endpoint excluded).
    ss.cycle.reserve(cycle_samples);
    ss.cycle.push_back(packed::unpack(rk.state().data(), rk.time()));
    const double t0 = rk.time();
    double next = t0 + P / cycle_samples;
    std::array<double, packed::kMomentDim> ybuf{};
    int produced = 1;
    rk.integrate_to(t0 + P, [&](const DenseStep& step) {
        const double t1 = step.t0 + step.h;
        const double eps = 1e-9 * std::max(1.0, std::abs(t1));
        while (produced < cycle_samples && next <= t1 + eps) {
            step.eval(next, ybuf.data());
            ss.cycle.push_back(packed::unpack(ybuf.data(), next));
            ++produced;
            next = t0 + P * produced / static_cast<double>(cycle_samples);
        }
    });

    for (int m = 0; m < 4; ++m) {
        cplx avg{0.0, 0.0};
        for (const auto& s : ss.cycle) avg += s.means[m];
        ss.period_mean[m] = avg / static_cast<double>(ss.cycle.size());
    }
    return ss;
}

// (1/P) * integral over the converged cycle of <x(t)> e^{-i n (2 pi / P) t},
// by the rectangle rule on the stored uniform grid (spectrally accurate for
// smooth periodic cycles). Under frame_detuning = 1, harmonic n = +1 of <a_t>
// is the lab-frame Stokes component at omega0.
inline cplx stroboscopic_component(const SteadyState& steady, Mode mode, int n) {
    if (steady.cycle.empty())
        throw ValidationError("stroboscopic_component: steady state not converged");
    const std::size_t M = steady.cycle.size();
    cplx acc{0.0, 0.0};
    for (std::size_t k = 0; k < M; ++k) {
        const double phase = -2.0 * std::numbers::pi * n * static_cast<double>(k) /
                             static_cast<double>(M);
        acc += steady.cycle[k].means[static_cast<int>(mode)] * std::polar(1.0, phase);
    }
    return acc / static_cast<double>(M);
}

} // namespace omsim
