#pragma once

// Two-time correlation C_alpha(tau) = <a_alpha^dag(0) a_alpha(tau)> from the
// converged steady cycle: the factorized part uses the period-averaged mean
// for <a^dag(0)>, the correlated part evolves the 8-component regression
// vector V_x(tau) = D<a_alpha^dag(0) x(tau)> alongside the moment system so
// its time-dependent coefficients stay exact.

#include <array>
#include <cmath>
#include <vector>

#include "omsim/dynamics.hpp"
#include "omsim/moment_system.hpp"
#include "omsim/rk45.hpp"

namespace omsim {

struct Correlation {
    Cavity cavity = Cavity::target;
    double dt = 0.0;
    double T = 0.0;
    std::vector<cplx> total;         // C(tau) samples
    std::vector<cplx> cumulant_part; // V_{a_alpha}(tau) samples
    cplx mean_conj0{};               // <a_alpha^dag(0)> (period-averaged, conjugated)
    std::vector<cplx> mean_harmonics; // steady-cycle harmonics c_n, index n + harmonic_span
    int harmonic_span = 0;
    double period = 0.0;
    double Omega0 = 1.0;
    double frame_detuning = 1.0;
    double gamma = 0.0;
    std::vector<double> tone_detunings; // tones driving the measured cavity
};

namespace detail {

struct AugmentedRhs {
    const MomentOde* ode;
    void operator()(double t, const double* y, double* dy) const {
        ode->eval_packed_augmented(t, y, dy);
    }
};

} // namespace detail

inline Correlation propagate_two_time(const MomentOde& ode, const SteadyState& steady,
                                      Cavity alpha, double T, double dt, double tol = 1e-9,
                                      int harmonic_span = 32) {
    if (steady.cycle.empty())
        throw ValidationError("propagate_two_time: steady state not converged");
    if (T <= 0.0 || dt <= 0.0 || dt > T)
        throw ValidationError("propagate_two_time: need 0 < dt <= T");

    const int a = alpha == Cavity::controller ? 0 : 1;
    const Mode am = static_cast<Mode>(a);

    Correlation corr;
    corr.cavity = alpha;
    corr.dt = dt;
    corr.T = T;
    corr.period = steady.period;
    corr.Omega0 = ode.params().Omega0;
    corr.frame_detuning = ode.drive().frame_detuning.value();
    corr.gamma = ode.params().gamma;
    for (const auto& tone : ode.drive().tones)
        if (tone.cavity == alpha) corr.tone_detunings.push_back(tone.detuning.value());
    corr.mean_conj0 = std::conj(steady.period_mean[a]);
    corr.harmonic_span = harmonic_span;
    corr.mean_harmonics.resize(2 * harmonic_span + 1);
    for (int n = -harmonic_span; n <= harmonic_span; ++n)
        corr.mean_harmonics[n + harmonic_span] = stroboscopic_component(steady, am, n);

    // Augmented initial state at cycle phase 0; tau is measured from 0 so the
    // drive phases of the cycle start are reproduced exactly (the converged
    // cycle starts at an integer multiple of the period).
    std::array<double, packed::kAugmentedDim> y{};
    packed::pack(steady.cycle.front(), y.data());
    const auto v0 = ode.two_time_initial(steady.cycle.front(), alpha);
    for (int k = 0; k < 8; ++k) {
        y[44 + 2 * k] = v0[k].real();
        y[44 + 2 * k + 1] = v0[k].imag();
    }

    Rk45Options opt;
    opt.rtol = tol;
    opt.atol = tol * 1e-3;
    Rk45<detail::AugmentedRhs> rk({&ode}, packed::kAugmentedDim, opt);
    rk.set_state(0.0, y.data());

    const auto n_samples = static_cast<std::size_t>(std::floor(T / dt)) + 1;
    corr.total.resize(n_samples);
    corr.cumulant_part.resize(n_samples);

    auto record = [&](std::size_t idx, const double* state) {
        const cplx mean_a(state[2 * a], state[2 * a + 1]);
        const cplx v_a(state[44 + 2 * a], state[44 + 2 * a + 1]);
        corr.cumulant_part[idx] = v_a;
        corr.total[idx] = corr.mean_conj0 * mean_a + v_a;
    };
    record(0, y.data());

    std::size_t next = 1;
    std::array<double, packed::kAugmentedDim> ybuf{};
    rk.integrate_to(T, [&](const DenseStep& step) {
        const double t1 = step.t0 + step.h;
        const double eps = 1e-9 * std::max(1.0, std::abs(t1));
        while (next < n_samples && next * dt <= t1 + eps) {
            step.eval(next * dt, ybuf.data());
            record(next, ybuf.data());
            ++next;
        }
    });
    if (next != n_samples)
        throw ConvergenceError("propagate_two_time: sampling did not reach T");
    return corr;
}

} // namespace omsim
