#pragma once

// Term-rewriting over ladder-operator monomials of degree <= 3: normal
// ordering with bosonic commutators, then cluster expansion into means and
// second-order cumulants (triplet correlations dropped). This is the machinery
// behind the doublet-truncated moment equations; hand-derived special cases
// pin the generated system in the golden tests.

#include <algorithm>
#include <array>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "omsim/params.hpp"
#include "omsim/rational.hpp"

namespace omsim {

enum class Mode : std::uint8_t { a_c = 0, a_t = 1, b_c = 2, b_t = 3 };
constexpr int kModes = 4;

inline const char* mode_name(Mode m) {
    switch (m) {
        case Mode::a_c: return "a_c";
        case Mode::a_t: return "a_t";
        case Mode::b_c: return "b_c";
        case Mode::b_t: return "b_t";
    }
    return "?";
}

namespace ladder {

struct LadderOp {
    std::uint8_t mode = 0;
    bool dagger = false;

    friend bool operator==(const LadderOp& a, const LadderOp& b) {
        return a.mode == b.mode && a.dagger == b.dagger;
    }
};

inline LadderOp op(Mode m, bool dagger) { return {static_cast<std::uint8_t>(m), dagger}; }
inline int op_index(const LadderOp& o) { return o.mode + (o.dagger ? kModes : 0); }

// Canonical order: creators before annihilators, modes ascending within each class.
inline int order_key(const LadderOp& o) { return (o.dagger ? 0 : kModes) + o.mode; }

struct Monomial {
    cplx coeff{1.0, 0.0};
    Rational harmonic{0, 1}; // time factor e^{i * harmonic * Omega0 * t}
    std::vector<LadderOp> ops;
};

using Poly = std::vector<Monomial>;

// Scratch index space used by expanded expressions:
//   [0,4)   <x_m>            [4,8)   conj(<x_m>)
//   [8,24)  N[i][j] = D<x_i^dag x_j>      (full Hermitian matrix)
//   [24,40) A[i][j] = D<x_i x_j>          (full symmetric matrix)
//   [40,56) conj(A[i][j])
//   [56,64) V[x] = D<S(0) x(t)> two-time entries, x over the 8 ladder ops
enum : std::uint8_t {
    kMeanBase = 0,
    kMeanConjBase = 4,
    kNormalBase = 8,
    kAnomBase = 24,
    kAnomConjBase = 40,
    kTwoTimeBase = 56,
    kScratchSize = 64,
};

inline std::uint8_t mean_factor(const LadderOp& o) {
    return static_cast<std::uint8_t>((o.dagger ? kMeanConjBase : kMeanBase) + o.mode);
}

// Cumulant factor for a pair that is already in normal order (u left of v).
inline std::uint8_t pair_factor(const LadderOp& u, const LadderOp& v) {
    if (u.dagger && !v.dagger) return static_cast<std::uint8_t>(kNormalBase + 4 * u.mode + v.mode);
    const std::uint8_t lo = std::min(u.mode, v.mode);
    const std::uint8_t hi = std::max(u.mode, v.mode);
    if (!u.dagger && !v.dagger) return static_cast<std::uint8_t>(kAnomBase + 4 * lo + hi);
    if (u.dagger && v.dagger) return static_cast<std::uint8_t>(kAnomConjBase + 4 * lo + hi);
    throw std::logic_error("pair_factor on an anti-ordered pair");
}

struct Term {
    cplx coeff{0.0, 0.0};
    Rational harmonic{0, 1};
    std::vector<std::uint8_t> factors;
};

using Expr = std::vector<Term>;

// Bring a polynomial to canonical normal order. Same-mode (annihilator,
// creator) swaps generate the contraction monomial via [x, x^dag] = 1.
inline Poly normal_order(const Poly& input) {
    Poly done;
    std::vector<Monomial> work(input.begin(), input.end());
    while (!work.empty()) {
        Monomial m = std::move(work.back());
        work.pop_back();
        bool split = false;
        for (std::size_t k = 0; k + 1 < m.ops.size();) {
            const LadderOp u = m.ops[k];
            const LadderOp v = m.ops[k + 1];
            if (order_key(u) <= order_key(v)) {
                ++k;
                continue;
            }
            if (u.mode == v.mode && !u.dagger && v.dagger) {
                Monomial contracted = m;
                contracted.ops.erase(contracted.ops.begin() + static_cast<long>(k),
                                     contracted.ops.begin() + static_cast<long>(k) + 2);
                std::swap(m.ops[k], m.ops[k + 1]);
                work.push_back(std::move(m));
                work.push_back(std::move(contracted));
                split = true;
                break;
            }
            std::swap(m.ops[k], m.ops[k + 1]);
            if (k > 0) --k;
        }
        if (!split) done.push_back(std::move(m));
    }

    // Combine like monomials.
    std::map<std::pair<std::pair<std::int64_t, std::int64_t>, std::vector<std::uint8_t>>, cplx>
        acc;
    for (const auto& m : done) {
        std::vector<std::uint8_t> key;
        key.reserve(m.ops.size());
        for (const auto& o : m.ops) key.push_back(static_cast<std::uint8_t>(op_index(o)));
        acc[{{m.harmonic.num, m.harmonic.den}, key}] += m.coeff;
    }
    Poly out;
    for (const auto& [key, coeff] : acc) {
        if (coeff == cplx(0.0, 0.0)) continue;
        Monomial m;
        m.coeff = coeff;
        m.harmonic = Rational(key.first.first, key.first.second);
        for (const auto idx : key.second)
            m.ops.push_back({static_cast<std::uint8_t>(idx % kModes), idx >= kModes});
        out.push_back(std::move(m));
    }
    return out;
}

// Cluster expansion of a normal-ordered polynomial of moments. Triplet
// cumulants are dropped; degree > 3 never arises from bilinear equations of
// motion applied to pair moments.
inline Expr expand_moments(const Poly& poly) {
    Expr out;
    auto push = [&](cplx coeff, const Rational& h, std::vector<std::uint8_t> factors) {
        out.push_back({coeff, h, std::move(factors)});
    };
    for (const auto& m : poly) {
        const auto& ops = m.ops;
        switch (ops.size()) {
            case 0:
                push(m.coeff, m.harmonic, {});
                break;
            case 1:
                push(m.coeff, m.harmonic, {mean_factor(ops[0])});
                break;
            case 2:
                push(m.coeff, m.harmonic, {mean_factor(ops[0]), mean_factor(ops[1])});
                push(m.coeff, m.harmonic, {pair_factor(ops[0], ops[1])});
                break;
            case 3:
                push(m.coeff, m.harmonic,
                     {mean_factor(ops[0]), mean_factor(ops[1]), mean_factor(ops[2])});
                push(m.coeff, m.harmonic, {mean_factor(ops[0]), pair_factor(ops[1], ops[2])});
                push(m.coeff, m.harmonic, {mean_factor(ops[1]), pair_factor(ops[0], ops[2])});
                push(m.coeff, m.harmonic, {mean_factor(ops[2]), pair_factor(ops[0], ops[1])});
                break;
            default:
                throw std::logic_error("moment of degree > 3 in doublet truncation");
        }
    }
    return out;
}

inline Expr multiply_by_factor(Expr expr, std::uint8_t factor, cplx scale = {1.0, 0.0}) {
    for (auto& term : expr) {
        term.factors.push_back(factor);
        term.coeff *= scale;
    }
    return expr;
}

inline void append_scaled(Expr& dst, const Expr& src, cplx scale) {
    for (const auto& term : src) {
        Term t = term;
        t.coeff *= scale;
        dst.push_back(std::move(t));
    }
}

// Canonicalize, merge like terms, and drop residues of exact cancellations
// (sum negligible against the largest canceling addend).
inline Expr simplify(const Expr& expr) {
    struct Acc {
        cplx sum{0.0, 0.0};
        double max_abs = 0.0;
    };
    std::map<std::pair<std::pair<std::int64_t, std::int64_t>, std::vector<std::uint8_t>>, Acc>
        acc;
    for (const auto& term : expr) {
        std::vector<std::uint8_t> factors = term.factors;
        std::sort(factors.begin(), factors.end());
        auto& slot = acc[{{term.harmonic.num, term.harmonic.den}, factors}];
        slot.sum += term.coeff;
        slot.max_abs = std::max(slot.max_abs, std::abs(term.coeff));
    }
    Expr out;
    for (const auto& [key, slot] : acc) {
        if (std::abs(slot.sum) <= 1e-12 * slot.max_abs) continue;
        out.push_back({slot.sum, Rational(key.first.first, key.first.second), key.second});
    }
    return out;
}

inline cplx evaluate(const Expr& expr, const std::array<cplx, kScratchSize>& scratch,
                     double omega0_t) {
    cplx total{0.0, 0.0};
    for (const auto& term : expr) {
        cplx value = term.coeff;
        if (!term.harmonic.is_zero())
            value *= std::polar(1.0, term.harmonic.value() * omega0_t);
        for (const auto f : term.factors) value *= scratch[f];
        total += value;
    }
    return total;
}

inline std::string factor_name(std::uint8_t f) {
    auto ij = [](std::uint8_t base, std::uint8_t v) {
        const int i = (v - base) / 4, j = (v - base) % 4;
        return std::string("[") + mode_name(static_cast<Mode>(i)) + "," +
               mode_name(static_cast<Mode>(j)) + "]";
    };
    if (f < kMeanConjBase) return std::string("<") + mode_name(static_cast<Mode>(f)) + ">";
    if (f < kNormalBase)
        return std::string("<") + mode_name(static_cast<Mode>(f - kMeanConjBase)) + ">*";
    if (f < kAnomBase) return "N" + ij(kNormalBase, f);
    if (f < kAnomConjBase) return "A" + ij(kAnomBase, f);
    if (f < kTwoTimeBase) return "A*" + ij(kAnomConjBase, f);
    const int x = f - kTwoTimeBase;
    return std::string("V[") + mode_name(static_cast<Mode>(x % kModes)) +
           (x >= kModes ? "^dag]" : "]");
}

inline std::string to_string(const Expr& expr) {
    if (expr.empty()) return "0";
    std::string out;
    char buf[96];
    for (std::size_t k = 0; k < expr.size(); ++k) {
        const auto& t = expr[k];
        if (k) out += " + ";
        std::snprintf(buf, sizeof(buf), "(%.9g%+.9gi)", t.coeff.real(), t.coeff.imag());
        out += buf;
        if (!t.harmonic.is_zero()) out += "*e^{i(" + t.harmonic.str() + ")w0t}";
        for (const auto f : t.factors) out += "*" + factor_name(f);
    }
    return out;
}

} // namespace ladder
} // namespace omsim
