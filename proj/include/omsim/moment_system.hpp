#pragma once

// Closed moment ODE (means + second cumulants) for the two-OMS model in the
// rotating frame at omega0 + frame_detuning * Omega0. The doublet equations
// are derived mechanically from the operator Heisenberg equations: every
// product is brought to normal order before cluster expansion, so the
// commutator delta terms are the only inhomogeneous sources in the cumulant
// block. The same machinery emits the quantum-regression rows for two-time
// correlations (spectator pinned at tau = 0).

#include <array>
#include <complex>
#include <cstring>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "omsim/errors.hpp"
#include "omsim/ladder.hpp"
#include "omsim/params.hpp"

namespace omsim {

struct CumulantState {
    double t = 0.0;
    std::array<cplx, 4> means{};       // <a_c>, <a_t>, <b_c>, <b_t>
    Eigen::Matrix4cd normal;           // N[i][j] = D<x_i^dag x_j>, Hermitian
    Eigen::Matrix4cd anomalous;        // A[i][j] = D<x_i x_j>, symmetric

    CumulantState() : normal(Eigen::Matrix4cd::Zero()), anomalous(Eigen::Matrix4cd::Zero()) {}
};

inline CumulantState vacuum_state() { return CumulantState{}; }

namespace packed {

// Real-vector layout used by the integrator. Only independent components are
// stored, so Hermiticity/symmetry is preserved exactly along trajectories.
//   [0,8)    means (re, im) x 4
//   [8,12)   N diagonal (real)
//   [12,24)  N upper off-diagonal (re, im): (0,1)(0,2)(0,3)(1,2)(1,3)(2,3)
//   [24,44)  A upper incl. diagonal (re, im): (0,0)(0,1)(0,2)(0,3)(1,1)...
//   [44,60)  two-time vector V (re, im) x 8, augmented systems only
constexpr int kMomentDim = 44;
constexpr int kAugmentedDim = 60;

constexpr std::array<std::pair<int, int>, 6> kNUpper = {
    {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};
constexpr std::array<std::pair<int, int>, 10> kAUpper = {
    {{0, 0}, {0, 1}, {0, 2}, {0, 3}, {1, 1}, {1, 2}, {1, 3}, {2, 2}, {2, 3}, {3, 3}}};

inline void pack(const CumulantState& s, double* y) {
    for (int i = 0; i < 4; ++i) {
        y[2 * i] = s.means[i].real();
        y[2 * i + 1] = s.means[i].imag();
    }
    for (int i = 0; i < 4; ++i) y[8 + i] = s.normal(i, i).real();
    for (std::size_t k = 0; k < kNUpper.size(); ++k) {
        const auto v = s.normal(kNUpper[k].first, kNUpper[k].second);
        y[12 + 2 * k] = v.real();
        y[12 + 2 * k + 1] = v.imag();
    }
    for (std::size_t k = 0; k < kAUpper.size(); ++k) {
        const auto v = s.anomalous(kAUpper[k].first, kAUpper[k].second);
        y[24 + 2 * k] = v.real();
        y[24 + 2 * k + 1] = v.imag();
    }
}

inline CumulantState unpack(const double* y, double t) {
    CumulantState s;
    s.t = t;
    for (int i = 0; i < 4; ++i) s.means[i] = cplx(y[2 * i], y[2 * i + 1]);
    for (int i = 0; i < 4; ++i) s.normal(i, i) = y[8 + i];
    for (std::size_t k = 0; k < kNUpper.size(); ++k) {
        const cplx v(y[12 + 2 * k], y[12 + 2 * k + 1]);
        s.normal(kNUpper[k].first, kNUpper[k].second) = v;
        s.normal(kNUpper[k].second, kNUpper[k].first) = std::conj(v);
    }
    for (std::size_t k = 0; k < kAUpper.size(); ++k) {
        const cplx v(y[24 + 2 * k], y[24 + 2 * k + 1]);
        s.anomalous(kAUpper[k].first, kAUpper[k].second) = v;
        s.anomalous(kAUpper[k].second, kAUpper[k].first) = v;
    }
    return s;
}

} // namespace packed

class MomentOde {
public:
    MomentOde(const SystemParams& params, const DriveConfig& drive)
        : params_(params), drive_(drive), period_(drive_period(drive, params.Omega0)) {
        const auto diags = validate(params, drive);
        if (has_errors(diags)) {
            std::string msg = "invalid model:";
            for (const auto& d : diags)
                if (d.severity == Severity::error) msg += " " + d.message + ";";
            throw ValidationError(msg);
        }
        build_operator_eoms();
        build_equations();
        compile();
    }

    const SystemParams& params() const { return params_; }
    const DriveConfig& drive() const { return drive_; }
    double period() const { return period_; }
    int dimension() const { return packed::kMomentDim; }
    int augmented_dimension() const { return packed::kAugmentedDim; }

    // --- packed evaluation (integrator path) ---

    void eval_packed(double t, const double* y, double* dy) const {
        std::array<cplx, ladder::kScratchSize> scratch{};
        fill_scratch(y, scratch);
        eval_moment_block(t, scratch, dy);
    }

    // Moment block plus the 8-component two-time regression vector.
    void eval_packed_augmented(double t, const double* y, double* dy) const {
        std::array<cplx, ladder::kScratchSize> scratch{};
        fill_scratch(y, scratch);
        for (int k = 0; k < 8; ++k)
            scratch[ladder::kTwoTimeBase + k] = cplx(y[44 + 2 * k], y[44 + 2 * k + 1]);
        eval_moment_block(t, scratch, dy);
        const double theta = params_.Omega0 * t;
        for (int k = 0; k < 8; ++k) {
            const cplx d = eval_compiled(regression_compiled_[k], scratch, theta);
            dy[44 + 2 * k] = d.real();
            dy[44 + 2 * k + 1] = d.imag();
        }
    }

    // --- structured evaluation (public contract) ---

    CumulantState rhs_eval(const CumulantState& state, double t) const {
        std::array<double, packed::kMomentDim> y{}, dy{};
        packed::pack(state, y.data());
        eval_packed(t, y.data(), dy.data());
        return packed::unpack(dy.data(), t);
    }

    // --- symbolic access (tests, debug dump) ---

    const ladder::Expr& mean_equation(Mode m) const { return mean_eqs_[static_cast<int>(m)]; }

    ladder::Expr pair_cumulant_equation(const ladder::LadderOp& u,
                                        const ladder::LadderOp& v) const {
        return derive_pair_cumulant(u, v);
    }

    const ladder::Expr& regression_row(int op_idx) const { return regression_eqs_[op_idx]; }

    std::string equations_text() const {
        std::ostringstream os;
        for (int i = 0; i < 4; ++i)
            os << "d<" << mode_name(static_cast<Mode>(i)) << ">/dt = "
               << ladder::to_string(mean_eqs_[i]) << "\n";
        for (int i = 0; i < 4; ++i)
            os << "dN[" << mode_name(static_cast<Mode>(i)) << "," << mode_name(static_cast<Mode>(i))
               << "]/dt = " << ladder::to_string(ndiag_eqs_[i]) << "\n";
        for (std::size_t k = 0; k < packed::kNUpper.size(); ++k)
            os << "dN[" << mode_name(static_cast<Mode>(packed::kNUpper[k].first)) << ","
               << mode_name(static_cast<Mode>(packed::kNUpper[k].second))
               << "]/dt = " << ladder::to_string(nupper_eqs_[k]) << "\n";
        for (std::size_t k = 0; k < packed::kAUpper.size(); ++k)
            os << "dA[" << mode_name(static_cast<Mode>(packed::kAUpper[k].first)) << ","
               << mode_name(static_cast<Mode>(packed::kAUpper[k].second))
               << "]/dt = " << ladder::to_string(aupper_eqs_[k]) << "\n";
        for (int k = 0; k < 8; ++k) {
            const int m = k % kModes;
            os << "dV[" << mode_name(static_cast<Mode>(m)) << (k >= kModes ? "^dag" : "")
               << "]/dt = " << ladder::to_string(regression_eqs_[k]) << "\n";
        }
        return os.str();
    }

    // Two-time initial condition: V_x(0) = D<x_alpha^dag(0) x(0)> from the
    // equal-time cumulants, with the reordering rule applied where needed.
    std::array<cplx, 8> two_time_initial(const CumulantState& s, Cavity alpha) const {
        const int a = alpha == Cavity::controller ? 0 : 1;
        std::array<cplx, 8> v{};
        for (int m = 0; m < kModes; ++m) {
            v[m] = s.normal(a, m);                     // D<a^dag x_m>
            v[kModes + m] = std::conj(s.anomalous(m, a)); // D<a^dag x_m^dag> = conj(D<x_m a>)
        }
        return v;
    }

private:
    struct CTerm {
        cplx coeff;
        int phase = -1; // index into harmonic table, -1 for static terms
        int n = 0;
        std::array<std::uint8_t, 3> f{};
    };
    using CTermList = std::vector<CTerm>;

    SystemParams params_;
    DriveConfig drive_;
    double period_;

    std::array<ladder::Poly, 8> eoms_; // operator Heisenberg equations
    std::array<ladder::Expr, 8> mean_raw_; // expanded d<x>/dt for every ladder op
    std::array<ladder::Expr, 4> mean_eqs_;
    std::array<ladder::Expr, 4> ndiag_eqs_;
    std::array<ladder::Expr, 6> nupper_eqs_;
    std::array<ladder::Expr, 10> aupper_eqs_;
    std::array<ladder::Expr, 8> regression_eqs_;

    std::vector<Rational> harmonics_;
    std::array<CTermList, 4> mean_compiled_;
    std::array<CTermList, 4> ndiag_compiled_;
    std::array<CTermList, 6> nupper_compiled_;
    std::array<CTermList, 10> aupper_compiled_;
    std::array<CTermList, 8> regression_compiled_;

    void build_operator_eoms() {
        using ladder::op;
        const cplx i1(0.0, 1.0);
        const double W0 = params_.Omega0;
        const cplx mu = i1 * drive_.frame_detuning.value() * W0 - 0.5 * params_.kappa;
        const std::array<cplx, 2> nu = {-i1 * params_.Omega_c * W0 - 0.5 * params_.gamma,
                                        -i1 * params_.Omega_t * W0 - 0.5 * params_.gamma};
        const cplx ig0 = i1 * params_.g0;
        const cplx iK = i1 * params_.K;

        for (int c = 0; c < 2; ++c) { // 0 = controller, 1 = target
            const Mode am = static_cast<Mode>(c);
            const Mode bm = static_cast<Mode>(2 + c);
            const Mode bo = static_cast<Mode>(2 + (1 - c)); // partner phonon mode

            ladder::Poly& a_eq = eoms_[ladder::op_index(op(am, false))];
            a_eq.push_back({mu, Rational(0, 1), {op(am, false)}});
            a_eq.push_back({ig0, Rational(0, 1), {op(am, false), op(bm, true)}});
            a_eq.push_back({ig0, Rational(0, 1), {op(am, false), op(bm, false)}});

            ladder::Poly& ad_eq = eoms_[ladder::op_index(op(am, true))];
            ad_eq.push_back({std::conj(mu), Rational(0, 1), {op(am, true)}});
            ad_eq.push_back({-ig0, Rational(0, 1), {op(am, true), op(bm, true)}});
            ad_eq.push_back({-ig0, Rational(0, 1), {op(am, true), op(bm, false)}});

            ladder::Poly& b_eq = eoms_[ladder::op_index(op(bm, false))];
            b_eq.push_back({nu[c], Rational(0, 1), {op(bm, false)}});
            b_eq.push_back({iK, Rational(0, 1), {op(bo, false)}});
            b_eq.push_back({ig0, Rational(0, 1), {op(am, true), op(am, false)}});

            ladder::Poly& bd_eq = eoms_[ladder::op_index(op(bm, true))];
            bd_eq.push_back({std::conj(nu[c]), Rational(0, 1), {op(bm, true)}});
            bd_eq.push_back({-iK, Rational(0, 1), {op(bo, true)}});
            bd_eq.push_back({-ig0, Rational(0, 1), {op(am, true), op(am, false)}});
        }

        // Drive tones: forcing E * e^{i (frame_detuning - detuning) Omega0 t}.
        for (const auto& tone : drive_.tones) {
            const Mode am = tone.cavity == Cavity::controller ? Mode::a_c : Mode::a_t;
            const Rational h = drive_.frame_detuning - tone.detuning;
            eoms_[ladder::op_index(op(am, false))].push_back({tone.amplitude, h, {}});
            eoms_[ladder::op_index(op(am, true))].push_back({std::conj(tone.amplitude), -h, {}});
        }
    }

    // Product-rule time derivative of a monomial's operator string.
    ladder::Poly d_dt(const std::vector<ladder::LadderOp>& ops) const {
        ladder::Poly out;
        for (std::size_t k = 0; k < ops.size(); ++k) {
            for (const auto& rhs_mono : eoms_[ladder::op_index(ops[k])]) {
                ladder::Monomial m;
                m.coeff = rhs_mono.coeff;
                m.harmonic = rhs_mono.harmonic;
                m.ops.assign(ops.begin(), ops.begin() + static_cast<long>(k));
                m.ops.insert(m.ops.end(), rhs_mono.ops.begin(), rhs_mono.ops.end());
                m.ops.insert(m.ops.end(), ops.begin() + static_cast<long>(k) + 1, ops.end());
                out.push_back(std::move(m));
            }
        }
        return out;
    }

    ladder::Expr derive_mean_raw(const ladder::LadderOp& x) const {
        return ladder::simplify(ladder::expand_moments(ladder::normal_order(d_dt({x}))));
    }

    // dD<uv>/dt = d<uv>/dt - <u> d<v>/dt - d<u>/dt <v>, everything expanded in
    // means and doublets after normal ordering. The pair itself is reordered
    // first via D<x x^dag> = D<x^dag x> + 1 (the constant drops under d/dt):
    // the damped equations of motion close on normal-ordered moments only.
    ladder::Expr derive_pair_cumulant(const ladder::LadderOp& u, const ladder::LadderOp& v) const {
        if (ladder::order_key(u) > ladder::order_key(v)) return derive_pair_cumulant(v, u);
        ladder::Expr expr =
            ladder::expand_moments(ladder::normal_order(d_dt({u, v})));
        ladder::append_scaled(
            expr, ladder::multiply_by_factor(mean_raw_[ladder::op_index(u)], ladder::mean_factor(v)),
            cplx(-1.0, 0.0));
        ladder::append_scaled(
            expr, ladder::multiply_by_factor(mean_raw_[ladder::op_index(v)], ladder::mean_factor(u)),
            cplx(-1.0, 0.0));
        return ladder::simplify(expr);
    }

    // Regression row for dD<S x>/dtau with the spectator S fixed at tau = 0:
    // linear terms pass through, bilinears factorize onto the V entries,
    // c-number drives cancel.
    ladder::Expr derive_regression_row(const ladder::LadderOp& x) const {
        ladder::Expr expr;
        const auto rhs = ladder::normal_order(eoms_[ladder::op_index(x)]);
        for (const auto& mono : rhs) {
            switch (mono.ops.size()) {
                case 0:
                    break; // cancels against <S><dx/dt>
                case 1:
                    expr.push_back({mono.coeff, mono.harmonic,
                                    {static_cast<std::uint8_t>(ladder::kTwoTimeBase +
                                                               ladder::op_index(mono.ops[0]))}});
                    break;
                case 2: {
                    const auto p = mono.ops[0], q = mono.ops[1];
                    expr.push_back({mono.coeff, mono.harmonic,
                                    {ladder::mean_factor(p),
                                     static_cast<std::uint8_t>(ladder::kTwoTimeBase +
                                                               ladder::op_index(q))}});
                    expr.push_back({mono.coeff, mono.harmonic,
                                    {ladder::mean_factor(q),
                                     static_cast<std::uint8_t>(ladder::kTwoTimeBase +
                                                               ladder::op_index(p))}});
                    break;
                }
                default:
                    throw std::logic_error("operator equation of degree > 2");
            }
        }
        return ladder::simplify(expr);
    }

    void build_equations() {
        using ladder::op;
        for (int k = 0; k < 8; ++k) {
            const ladder::LadderOp x{static_cast<std::uint8_t>(k % kModes), k >= kModes};
            mean_raw_[k] = derive_mean_raw(x);
        }
        for (int i = 0; i < 4; ++i) mean_eqs_[i] = mean_raw_[i];
        for (int i = 0; i < 4; ++i)
            ndiag_eqs_[i] = derive_pair_cumulant(op(static_cast<Mode>(i), true),
                                                 op(static_cast<Mode>(i), false));
        for (std::size_t k = 0; k < packed::kNUpper.size(); ++k)
            nupper_eqs_[k] =
                derive_pair_cumulant(op(static_cast<Mode>(packed::kNUpper[k].first), true),
                                     op(static_cast<Mode>(packed::kNUpper[k].second), false));
        for (std::size_t k = 0; k < packed::kAUpper.size(); ++k)
            aupper_eqs_[k] =
                derive_pair_cumulant(op(static_cast<Mode>(packed::kAUpper[k].first), false),
                                     op(static_cast<Mode>(packed::kAUpper[k].second), false));
        for (int k = 0; k < 8; ++k) {
            const ladder::LadderOp x{static_cast<std::uint8_t>(k % kModes), k >= kModes};
            regression_eqs_[k] = derive_regression_row(x);
        }
    }

    int harmonic_index(const Rational& h) {
        if (h.is_zero()) return -1;
        for (std::size_t i = 0; i < harmonics_.size(); ++i)
            if (harmonics_[i] == h) return static_cast<int>(i);
        harmonics_.push_back(h);
        return static_cast<int>(harmonics_.size()) - 1;
    }

    CTermList compile_expr(const ladder::Expr& expr) {
        CTermList out;
        out.reserve(expr.size());
        for (const auto& term : expr) {
            if (term.factors.size() > 3) throw std::logic_error("term with more than 3 factors");
            CTerm ct;
            ct.coeff = term.coeff;
            ct.phase = harmonic_index(term.harmonic);
            ct.n = static_cast<int>(term.factors.size());
            for (std::size_t i = 0; i < term.factors.size(); ++i) ct.f[i] = term.factors[i];
            out.push_back(ct);
        }
        return out;
    }

    void compile() {
        for (int i = 0; i < 4; ++i) mean_compiled_[i] = compile_expr(mean_eqs_[i]);
        for (int i = 0; i < 4; ++i) ndiag_compiled_[i] = compile_expr(ndiag_eqs_[i]);
        for (std::size_t k = 0; k < nupper_eqs_.size(); ++k)
            nupper_compiled_[k] = compile_expr(nupper_eqs_[k]);
        for (std::size_t k = 0; k < aupper_eqs_.size(); ++k)
            aupper_compiled_[k] = compile_expr(aupper_eqs_[k]);
        for (int k = 0; k < 8; ++k) regression_compiled_[k] = compile_expr(regression_eqs_[k]);
    }

    static void fill_scratch(const double* y, std::array<cplx, ladder::kScratchSize>& s) {
        for (int i = 0; i < 4; ++i) {
            s[ladder::kMeanBase + i] = cplx(y[2 * i], y[2 * i + 1]);
            s[ladder::kMeanConjBase + i] = std::conj(s[ladder::kMeanBase + i]);
        }
        for (int i = 0; i < 4; ++i) s[ladder::kNormalBase + 5 * i] = y[8 + i];
        for (std::size_t k = 0; k < packed::kNUpper.size(); ++k) {
            const auto [i, j] = packed::kNUpper[k];
            const cplx v(y[12 + 2 * k], y[12 + 2 * k + 1]);
            s[ladder::kNormalBase + 4 * i + j] = v;
            s[ladder::kNormalBase + 4 * j + i] = std::conj(v);
        }
        for (std::size_t k = 0; k < packed::kAUpper.size(); ++k) {
            const auto [i, j] = packed::kAUpper[k];
            const cplx v(y[24 + 2 * k], y[24 + 2 * k + 1]);
            s[ladder::kAnomBase + 4 * i + j] = v;
            s[ladder::kAnomBase + 4 * j + i] = v;
        }
        for (int k = 0; k < 16; ++k)
            s[ladder::kAnomConjBase + k] = std::conj(s[ladder::kAnomBase + k]);
    }

    cplx eval_compiled(const CTermList& terms, const std::array<cplx, ladder::kScratchSize>& s,
                       double theta) const {
        cplx total{0.0, 0.0};
        for (const auto& t : terms) {
            cplx v = t.coeff;
            if (t.phase >= 0) v *= std::polar(1.0, harmonics_[t.phase].value() * theta);
            for (int i = 0; i < t.n; ++i) v *= s[t.f[i]];
            total += v;
        }
        return total;
    }

    void eval_moment_block(double t, const std::array<cplx, ladder::kScratchSize>& scratch,
                           double* dy) const {
        const double theta = params_.Omega0 * t;
        for (int i = 0; i < 4; ++i) {
            const cplx d = eval_compiled(mean_compiled_[i], scratch, theta);
            dy[2 * i] = d.real();
            dy[2 * i + 1] = d.imag();
        }
        for (int i = 0; i < 4; ++i)
            dy[8 + i] = eval_compiled(ndiag_compiled_[i], scratch, theta).real();
        for (std::size_t k = 0; k < nupper_compiled_.size(); ++k) {
            const cplx d = eval_compiled(nupper_compiled_[k], scratch, theta);
            dy[12 + 2 * k] = d.real();
            dy[12 + 2 * k + 1] = d.imag();
        }
        for (std::size_t k = 0; k < aupper_compiled_.size(); ++k) {
            const cplx d = eval_compiled(aupper_compiled_[k], scratch, theta);
            dy[24 + 2 * k] = d.real();
            dy[24 + 2 * k + 1] = d.imag();
        }
    }
};

inline MomentOde build_moment_ode(const SystemParams& params, const DriveConfig& drive) {
    return MomentOde(params, drive);
}

} // namespace omsim
