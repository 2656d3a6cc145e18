#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>

#include "omsim/errors.hpp"

namespace omsim {

// Exact rational arithmetic for drive detunings. Keeping detunings rational
// (denominator-bounded) guarantees the driven system has a finite fundamental
// period, which the stroboscopic steady-state detector relies on.
struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;

    constexpr Rational() = default;
    Rational(std::int64_t n, std::int64_t d) : num(n), den(d) { normalize(); }
    Rational(std::int64_t n) : num(n), den(1) {} // NOLINT(google-explicit-constructor)

    void normalize() {
        if (den == 0) throw ValidationError("rational with zero denominator");
        if (den < 0) { num = -num; den = -den; }
        const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
        if (g > 1) { num /= g; den /= g; }
        if (num == 0) den = 1;
    }

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }

    Rational operator-() const { return Rational(-num, den); }
    friend Rational operator+(const Rational& a, const Rational& b) {
        return Rational(a.num * b.den + b.num * a.den, a.den * b.den);
    }
    friend Rational operator-(const Rational& a, const Rational& b) {
        return Rational(a.num * b.den - b.num * a.den, a.den * b.den);
    }
    friend bool operator==(const Rational& a, const Rational& b) {
        return a.num == b.num && a.den == b.den;
    }
    friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }
    friend bool operator<(const Rational& a, const Rational& b) {
        return a.num * b.den < b.num * a.den;
    }

    Rational abs() const { return Rational(num < 0 ? -num : num, den); }
    bool is_zero() const { return num == 0; }

    std::string str() const {
        if (den == 1) return std::to_string(num);
        return std::to_string(num) + "/" + std::to_string(den);
    }
};

// gcd over Q: gcd(a/b, c/d) = gcd(a*d, c*b) / (b*d).
inline Rational rational_gcd(const Rational& a, const Rational& b) {
    if (a.is_zero()) return b.abs();
    if (b.is_zero()) return a.abs();
    const std::int64_t n = std::gcd(std::llabs(a.num * b.den), std::llabs(b.num * a.den));
    return Rational(n, a.den * b.den);
}

// Parses "3", "-1/2", "0.5" (decimals are snapped to denominator <= max_den).
inline Rational parse_rational(const std::string& text, std::int64_t max_den = 16) {
    const auto slash = text.find('/');
    if (slash != std::string::npos) {
        const std::int64_t n = std::stoll(text.substr(0, slash));
        const std::int64_t d = std::stoll(text.substr(slash + 1));
        return Rational(n, d);
    }
    if (text.find('.') == std::string::npos && text.find('e') == std::string::npos &&
        text.find('E') == std::string::npos) {
        return Rational(std::stoll(text), 1);
    }
    const double x = std::stod(text);
    // Best denominator-bounded approximation by direct scan; max_den is tiny.
    Rational best(0, 1);
    double best_err = std::abs(x);
    for (std::int64_t d = 1; d <= max_den; ++d) {
        const auto n = static_cast<std::int64_t>(std::llround(x * static_cast<double>(d)));
        const double err = std::abs(x - static_cast<double>(n) / static_cast<double>(d));
        if (err < best_err - 1e-15) { best = Rational(n, d); best_err = err; }
    }
    if (best_err > 1e-9)
        throw ValidationError("detuning '" + text + "' is not a rational with denominator <= " +
                              std::to_string(max_den));
    return best;
}

} // namespace omsim
