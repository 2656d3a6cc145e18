#include <catch2/catch_amalgamated.hpp>

#include <numbers>

#include "omsim/params.hpp"
#include "omsim/presets.hpp"

using namespace omsim;

namespace {

SystemParams reference_params() {
    SystemParams p;
    p.kappa = 0.23;
    p.g0 = 2.4e-4;
    p.gamma = 4.7e-4;
    p.K = 2.35e-4;
    return p;
}

bool has_message(const std::vector<Diagnostic>& diags, Severity sev, const std::string& needle) {
    for (const auto& d : diags)
        if (d.severity == sev && d.message.find(needle) != std::string::npos) return true;
    return false;
}

} // namespace

TEST_CASE("validate accepts the reference parameter set") {
    const auto diags = validate(reference_params(), preset("fig2_blue").drive);
    CHECK(diags.empty());
}

TEST_CASE("validate flags negative damping as an error") {
    SystemParams p = reference_params();
    p.kappa = -0.1;
    const auto diags = validate(p, DriveConfig{});
    CHECK(has_errors(diags));
    CHECK(has_message(diags, Severity::error, "negative damping rate"));
}

TEST_CASE("validate warns when the sideband-resolved regime breaks") {
    SystemParams p = reference_params();
    p.kappa = 2.0;
    const auto diags = validate(p, DriveConfig{});
    CHECK_FALSE(has_errors(diags));
    CHECK(has_message(diags, Severity::warning, "sideband-resolved regime violated"));
}

TEST_CASE("validate rejects duplicate tones and oversized denominators") {
    DriveConfig drive;
    drive.tones.push_back({Cavity::target, cplx(1.0, 0.0), Rational(1, 1)});
    drive.tones.push_back({Cavity::target, cplx(0.5, 0.0), Rational(1, 1)});
    CHECK(has_errors(validate(reference_params(), drive)));

    DriveConfig fine_denominator;
    fine_denominator.tones.push_back({Cavity::target, cplx(1.0, 0.0), Rational(1, 32)});
    CHECK(has_errors(validate(reference_params(), fine_denominator)));
}

TEST_CASE("cooperativity matches the defining formula") {
    const auto r = cooperativity(reference_params(), 0.0);
    CHECK_THAT(r.C, Catch::Matchers::WithinRel(2.1314e-3, 1e-3));
    CHECK(r.C_m == 0.0);

    SystemParams zero_g = reference_params();
    zero_g.g0 = 0.0;
    CHECK(cooperativity(zero_g, 1.0).C == 0.0);

    SystemParams no_damping = reference_params();
    no_damping.gamma = 0.0;
    CHECK_THROWS_AS(cooperativity(no_damping, 0.0), ValidationError);
}

TEST_CASE("preset catalog round-trips validation and matches the named lines") {
    for (const auto& p : preset_catalog()) {
        INFO(p.name);
        CHECK_FALSE(has_errors(validate(p.params, p.drive)));
    }

    const auto& red = preset("fig2_red");
    CHECK(red.params.K == 0.0);
    REQUIRE(red.drive.tones.size() == 1);
    CHECK(red.drive.tones[0].cavity == Cavity::target);
    CHECK(red.drive.tones[0].detuning == Rational(1, 1));
    CHECK(red.drive.tones[0].amplitude == cplx(1.0, 0.0));

    const auto& green = preset("fig2_green");
    CHECK(tone_amplitude(green.drive, Cavity::controller, Rational(1, 1)) == cplx(4.0, 0.0));
    CHECK(tone_amplitude(green.drive, Cavity::target, Rational(1, 1)) == cplx(1.0, 0.0));

    const auto& blue = preset("fig2_blue");
    CHECK(tone_amplitude(blue.drive, Cavity::controller, Rational(0, 1)) == cplx(1.0, 0.0));
    CHECK(tone_amplitude(blue.drive, Cavity::controller, Rational(1, 1)) == cplx(1.0, 0.0));
    CHECK(tone_amplitude(blue.drive, Cavity::target, Rational(1, 1)) == cplx(1.0, 0.0));

    CHECK_THROWS_AS(preset("does_not_exist"), ValidationError);
    try {
        preset("does_not_exist");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("fig2_blue") != std::string::npos);
    }
}

TEST_CASE("fundamental period is 2*pi for integer detunings, 4*pi for half-integer") {
    for (const auto& p : preset_catalog()) {
        INFO(p.name);
        const double period = drive_period(p.drive, p.params.Omega0);
        if (p.name == "fig3_yellow")
            CHECK_THAT(period, Catch::Matchers::WithinRel(4.0 * std::numbers::pi, 1e-12));
        else
            CHECK_THAT(period, Catch::Matchers::WithinRel(2.0 * std::numbers::pi, 1e-12));
    }
}

TEST_CASE("rational parsing and gcd") {
    CHECK(parse_rational("-1/2") == Rational(-1, 2));
    CHECK(parse_rational("3") == Rational(3, 1));
    CHECK(parse_rational("0.5") == Rational(1, 2));
    CHECK_THROWS_AS(parse_rational("0.123456"), ValidationError);
    CHECK(rational_gcd(Rational(3, 2), Rational(1, 2)) == Rational(1, 2));
    CHECK(rational_gcd(Rational(0, 1), Rational(2, 1)) == Rational(2, 1));
}
