#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "omsim/presets.hpp"
#include "omsim/spectrum.hpp"

using namespace omsim;

namespace {

// Synthetic correlation: a pure harmonic comb with prescribed line weights.
Correlation synthetic_comb(std::vector<std::pair<int, cplx>> lines,
                           std::vector<double> tone_detunings) {
    Correlation corr;
    corr.dt = 0.1;
    corr.T = 10.0;
    corr.cumulant_part.assign(101, cplx(0.0, 0.0));
    corr.total = corr.cumulant_part;
    corr.mean_conj0 = cplx(1.0, 0.0);
    corr.harmonic_span = 8;
    corr.mean_harmonics.assign(17, cplx(0.0, 0.0));
    for (const auto& [n, c] : lines) corr.mean_harmonics[n + corr.harmonic_span] = c;
    corr.period = 2.0 * std::numbers::pi;
    corr.Omega0 = 1.0;
    corr.frame_detuning = 1.0;
    corr.gamma = 4.7e-4;
    corr.tone_detunings = std::move(tone_detunings);
    return corr;
}

} // namespace

TEST_CASE("g0 = 0 correlation factorizes and peaks exactly at the drive detuning") {
    for (const char* name : {"fig2_red", "fig2b_black"}) {
        INFO(name);
        auto pre = preset(name);
        pre.params.g0 = 0.0;
        MomentOde ode(pre.params, pre.drive);
        const auto ss = detect_steady(ode, vacuum_state(), 1e-9, 2000);
        const auto corr = propagate_two_time(ode, ss, Cavity::target, 200.0, 0.1);

        // Cumulant part vanishes identically at zero coupling.
        for (const auto& v : corr.cumulant_part) CHECK(std::abs(v) == 0.0);

        // Equal-time consistency: C(0) = |<a^dag(0)>|^2 + N_aa = |mbar|^2 here.
        CHECK_THAT(std::abs(corr.total.front() - std::norm(corr.mean_conj0)),
                   Catch::Matchers::WithinAbs(0.0, 1e-7));

        const auto grid = spectrum_grid(-1.5, 3.5, 2001, {0.0, 1.0, 2.0});
        const auto spec = compute_spectrum(corr, grid);
        const double xi = pre.drive.tones[0].detuning.value();
        CHECK_THAT(spec.argmax_delta, Catch::Matchers::WithinAbs(xi, 1e-12));
        const std::size_t at_max =
            std::lower_bound(spec.delta.begin(), spec.delta.end(), spec.argmax_delta) -
            spec.delta.begin();
        CHECK(spec.normalized[at_max] == 1.0);
    }
}

TEST_CASE("frame choice does not move the lab spectrum (linear case, exact)") {
    auto pre = preset("fig2_red");
    pre.params.g0 = 0.0;

    const auto grid = spectrum_grid(-1.5, 3.5, 801, {0.0, 1.0, 2.0});
    std::vector<double> norms[2];
    int idx = 0;
    for (const Rational xi_ref : {Rational(1, 1), Rational(0, 1)}) {
        DriveConfig drive = pre.drive;
        drive.frame_detuning = xi_ref;
        MomentOde ode(pre.params, drive);
        const auto ss = detect_steady(ode, vacuum_state(), 1e-9, 2000);
        const auto corr = propagate_two_time(ode, ss, Cavity::target, 200.0, 0.1);
        norms[idx++] = compute_spectrum(corr, grid).normalized;
    }
    for (std::size_t i = 0; i < norms[0].size(); ++i)
        CHECK(std::abs(norms[0][i] - norms[1][i]) < 1e-6);
}

TEST_CASE("eta mechanics on a synthetic drive + Stokes comb") {
    // Drive line (weight 1) at delta = 1, Stokes line (weight 1e-3) at delta = 0.
    const auto corr = synthetic_comb({{0, cplx(1.0, 0.0)}, {1, cplx(1e-3, 0.0)}}, {1.0});
    const auto grid = spectrum_grid(-1.5, 3.5, 4001, {0.0, 1.0, 2.0});
    SpectrumOptions opt;
    opt.linewidth = 2e-5;
    const auto spec = compute_spectrum(corr, grid, opt);

    CHECK(spec.argmax_delta == 1.0);
    const auto report = find_peaks_eta(spec, 0.01);

    const Peak* stokes = report.at(0.0);
    REQUIRE(stokes != nullptr);
    CHECK(stokes->kind == "stokes");
    CHECK(stokes->order == -1);
    // Hand estimate: height ~ (1e-3/eps)/(1/eps) = 1e-3, baseline ~ drive tail
    // eps/|delta-1| ~ 2e-5, so eta ~ 50 with O(1) corrections.
    CHECK(stokes->eta > 25.0);
    CHECK(stokes->eta < 80.0);

    const Peak* drive = report.at(1.0);
    REQUIRE(drive != nullptr);
    CHECK(drive->kind == "drive");
    CHECK(drive->height == 1.0);

    const Peak* anti = report.at(2.0);
    REQUIRE(anti != nullptr);
    CHECK(anti->kind == "anti_stokes");
    CHECK(anti->eta < 1.5); // no line there, just smooth tails
}

TEST_CASE("flat spectrum yields eta = 1 everywhere") {
    Spectrum spec;
    for (int i = 0; i <= 4000; ++i) spec.delta.push_back(-1.5 + 5.0 * i / 4000.0);
    spec.values.assign(spec.delta.size(), cplx(0.7, 0.0));
    spec.normalized.assign(spec.delta.size(), 1.0);
    spec.max_abs = 0.7;
    spec.gamma = 4.7e-4;
    spec.tone_detunings = {1.0};

    const auto report = find_peaks_eta(spec, 0.02);
    REQUIRE(!report.peaks.empty());
    for (const auto& p : report.peaks) {
        CHECK(p.eta == 1.0);
        CHECK(p.dip == 1.0);
    }
}

TEST_CASE("peak finder validates its inputs") {
    Spectrum empty;
    CHECK_THROWS_AS(find_peaks_eta(empty, 0.01), ValidationError);
    Spectrum tiny;
    tiny.delta = {0.0, 1.0};
    tiny.normalized = {1.0, 1.0};
    CHECK_THROWS_AS(find_peaks_eta(tiny, 0.0), ValidationError);
    CHECK_THROWS_AS(find_peaks_eta(tiny, -1.0), ValidationError);
}

TEST_CASE("spectrum grid contains the requested centers exactly") {
    const auto grid = spectrum_grid(-1.5, 3.5, 101, {0.0, 1.0, 2.0}, 0.02, 1e-4);
    for (double c : {0.0, 1.0, 2.0})
        CHECK(std::binary_search(grid.begin(), grid.end(), c));
    CHECK(std::is_sorted(grid.begin(), grid.end()));
    for (std::size_t i = 1; i < grid.size(); ++i) CHECK(grid[i] > grid[i - 1]);
    CHECK_THROWS_AS(spectrum_grid(1.0, -1.0), ValidationError);
}

TEST_CASE("propagate_two_time validates its inputs") {
    const auto& pre = preset("fig2_blue");
    MomentOde ode(pre.params, pre.drive);
    SteadyState not_converged;
    CHECK_THROWS_AS(propagate_two_time(ode, not_converged, Cavity::target, 10.0, 0.1),
                    ValidationError);
}

TEST_CASE("compute_spectrum flags coarse grids and non-coverage") {
    const auto corr = synthetic_comb({{0, cplx(1.0, 0.0)}}, {1.0});
    const auto coarse = compute_spectrum(corr, spectrum_grid(-1.5, 3.5, 101));
    REQUIRE(!coarse.warnings.empty());

    std::vector<double> narrow;
    for (int i = 0; i <= 100; ++i) narrow.push_back(0.5 + i * 0.01);
    const auto off = compute_spectrum(corr, narrow);
    bool coverage_warning = false;
    for (const auto& w : off.warnings)
        coverage_warning |= w.find("cover") != std::string::npos;
    CHECK(coverage_warning);
}
