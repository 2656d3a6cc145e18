#pragma once

// Embedded Dormand-Prince 5(4) integrator with the standard quartic dense
// interpolant. Hand-rolled: the integration loop is entangled with
// stroboscopic stepping and deterministic sampling, and the coefficients are
// pinned here once.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <sstream>
#include <vector>

#include "omsim/errors.hpp"

namespace omsim {

struct Rk45Options {
    double rtol = 1e-9;
    double atol = 1e-12;
    double h_init = 1e-2;
    double h_max = 0.0; // 0 = unbounded
};

// Interpolant over one accepted step [t0, t0 + h].
class DenseStep {
public:
    double t0 = 0.0, h = 0.0;

    void resize(std::size_t dim) {
        for (auto* r : {&r1_, &r2_, &r3_, &r4_, &r5_}) r->assign(dim, 0.0);
    }

    void eval(double t, double* y) const {
        const double theta = (t - t0) / h;
        const double om = 1.0 - theta;
        for (std::size_t i = 0; i < r1_.size(); ++i)
            y[i] = r1_[i] + theta * (r2_[i] + om * (r3_[i] + theta * (r4_[i] + om * r5_[i])));
    }

    std::vector<double> r1_, r2_, r3_, r4_, r5_;
};

template <typename Rhs>
class Rk45 {
public:
    Rk45(Rhs rhs, std::size_t dim, Rk45Options opt = {})
        : rhs_(std::move(rhs)), dim_(dim), opt_(opt) {
        y_.assign(dim, 0.0);
        for (auto& k : k_) k.assign(dim, 0.0);
        ytmp_.assign(dim, 0.0);
        ynew_.assign(dim, 0.0);
        dense_.resize(dim);
    }

    void set_state(double t, const double* y) {
        t_ = t;
        std::copy(y, y + dim_, y_.begin());
        h_ = opt_.h_init;
        fsal_valid_ = false;
    }

    double time() const { return t_; }
    const std::vector<double>& state() const { return y_; }
    std::size_t dimension() const { return dim_; }
    std::size_t steps_taken() const { return n_accepted_; }

    // Advance exactly to t_end. step_cb (optional) sees every accepted step's
    // dense interpolant; sampling through it is deterministic.
    void integrate_to(double t_end,
                      const std::function<void(const DenseStep&)>& step_cb = nullptr) {
        if (t_end < t_) throw ValidationError("integrate_to: t_end before current time");
        while (t_ < t_end) {
            if (!fsal_valid_) {
                rhs_(t_, y_.data(), k_[0].data());
                fsal_valid_ = true;
            }
            double h = h_;
            if (opt_.h_max > 0.0) h = std::min(h, opt_.h_max);
            bool clipped = false;
            if (t_ + h >= t_end) {
                h = t_end - t_;
                clipped = true;
            }
            const double h_floor =
                16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t_));
            if (h < h_floor) {
                // A clipped final sliver is indistinguishable from roundoff.
                if (clipped) { t_ = t_end; return; }
                stiffness_abort(h);
            }

            const double err = attempt_step(h);
            if (err <= 1.0) {
                finish_step(h);
                if (step_cb) step_cb(dense_);
                if (!clipped) h_ = h * growth(err);
                else h_ = std::max(h_, h * growth(err));
            } else {
                if (h <= h_floor) stiffness_abort(h);
                h_ = h * growth(err); // rejected: y_ and k1 are unchanged, retry smaller
            }
        }
    }

private:
    static double growth(double err) {
        const double factor = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
        return std::clamp(factor, 0.2, 5.0);
    }

    [[noreturn]] void stiffness_abort(double h) const {
        std::ostringstream os;
        os << "step-size underflow at t = " << t_ << " (h = " << h
           << "): system too stiff for the explicit integrator at rtol = " << opt_.rtol;
        throw ConvergenceError(os.str());
    }

    // Returns the scaled error norm; fills k_[1..6], ynew_.
    double attempt_step(double h) {
        static constexpr double a21 = 1.0 / 5;
        static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
        static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
        static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                                a53 = 64448.0 / 6561, a54 = -212.0 / 729;
        static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                                a64 = 49.0 / 176, a65 = -5103.0 / 18656;
        static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                                b5 = -2187.0 / 6784, b6 = 11.0 / 84;
        static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                                e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
        static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;

        for (std::size_t i = 0; i < dim_; ++i) ytmp_[i] = y_[i] + h * a21 * k_[0][i];
        rhs_(t_ + c2 * h, ytmp_.data(), k_[1].data());

        for (std::size_t i = 0; i < dim_; ++i)
            ytmp_[i] = y_[i] + h * (a31 * k_[0][i] + a32 * k_[1][i]);
        rhs_(t_ + c3 * h, ytmp_.data(), k_[2].data());

        for (std::size_t i = 0; i < dim_; ++i)
            ytmp_[i] = y_[i] + h * (a41 * k_[0][i] + a42 * k_[1][i] + a43 * k_[2][i]);
        rhs_(t_ + c4 * h, ytmp_.data(), k_[3].data());

        for (std::size_t i = 0; i < dim_; ++i)
            ytmp_[i] = y_[i] + h * (a51 * k_[0][i] + a52 * k_[1][i] + a53 * k_[2][i] +
                                    a54 * k_[3][i]);
        rhs_(t_ + c5 * h, ytmp_.data(), k_[4].data());

        for (std::size_t i = 0; i < dim_; ++i)
            ytmp_[i] = y_[i] + h * (a61 * k_[0][i] + a62 * k_[1][i] + a63 * k_[2][i] +
                                    a64 * k_[3][i] + a65 * k_[4][i]);
        rhs_(t_ + h, ytmp_.data(), k_[5].data());

        for (std::size_t i = 0; i < dim_; ++i)
            ynew_[i] = y_[i] + h * (b1 * k_[0][i] + b3 * k_[2][i] + b4 * k_[3][i] +
                                    b5 * k_[4][i] + b6 * k_[5][i]);
        rhs_(t_ + h, ynew_.data(), k_[6].data());

        double err_sq = 0.0;
        for (std::size_t i = 0; i < dim_; ++i) {
            const double e = h * (e1 * k_[0][i] + e3 * k_[2][i] + e4 * k_[3][i] +
                                  e5 * k_[4][i] + e6 * k_[5][i] + e7 * k_[6][i]);
            const double scale =
                opt_.atol + opt_.rtol * std::max(std::abs(y_[i]), std::abs(ynew_[i]));
            err_sq += (e / scale) * (e / scale);
        }
        return std::sqrt(err_sq / static_cast<double>(dim_));
    }

    void finish_step(double h) {
        static constexpr double d1 = -12715105075.0 / 11282082432.0;
        static constexpr double d3 = 87487479700.0 / 32700410799.0;
        static constexpr double d4 = -10690763975.0 / 1880347072.0;
        static constexpr double d5 = 701980252875.0 / 199316789632.0;
        static constexpr double d6 = -1453857185.0 / 822651844.0;
        static constexpr double d7 = 69997945.0 / 29380423.0;

        dense_.t0 = t_;
        dense_.h = h;
        for (std::size_t i = 0; i < dim_; ++i) {
            const double dy = ynew_[i] - y_[i];
            dense_.r1_[i] = y_[i];
            dense_.r2_[i] = dy;
            dense_.r3_[i] = h * k_[0][i] - dy;
            dense_.r4_[i] = dy - h * k_[6][i] - dense_.r3_[i];
            dense_.r5_[i] = h * (d1 * k_[0][i] + d3 * k_[2][i] + d4 * k_[3][i] + d5 * k_[4][i] +
                                 d6 * k_[5][i] + d7 * k_[6][i]);
        }
        t_ += h;
        y_.swap(ynew_);
        k_[0].swap(k_[6]); // FSAL
        fsal_valid_ = true;
        ++n_accepted_;
    }

    Rhs rhs_;
    std::size_t dim_;
    Rk45Options opt_;
    double t_ = 0.0;
    double h_ = 1e-2;
    bool fsal_valid_ = false;
    std::size_t n_accepted_ = 0;
    std::vector<double> y_, ytmp_, ynew_;
    std::array<std::vector<double>, 7> k_;
    DenseStep dense_;
};

} // namespace omsim
