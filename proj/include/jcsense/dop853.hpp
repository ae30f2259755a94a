#pragma once

// Explicit Runge-Kutta integrator of order 8 (Dormand-Prince 8(5,3)) with a
// PI step-size controller and seventh-order dense output. Works for real or
// complex Eigen vectors.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <sstream>
#include <utility>

#include <Eigen/Dense>

#include "jcsense/dop853_tableau.hpp"
#include "jcsense/errors.hpp"

namespace jcsense::ode {

struct Options {
    double rtol = 1e-9;
    double atol = 1e-11;
    double first_step = 0.0;  // 0: automatic
    double max_step = std::numeric_limits<double>::infinity();
    double safety = 0.9;
    double min_factor = 0.333;  // smallest step shrink per attempt
    double max_factor = 6.0;    // largest step growth per step
    double pi_beta = 0.04;      // 0 gives a plain I controller
    std::size_t max_steps = 100'000'000;
};

struct Stats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t rhs_evaluations = 0;
    double last_step = 0.0;
};

class StepSizeUnderflow : public NumericalError {
public:
    StepSizeUnderflow(double t, double h)
        : NumericalError(describe(t, h)), t_(t), h_(h) {}
    double time() const noexcept { return t_; }
    double step() const noexcept { return h_; }

private:
    static std::string describe(double t, double h) {
        std::ostringstream os;
        os.precision(17);
        os << "step size underflow at t=" << t << " (h=" << h << ")";
        return os.str();
    }
    double t_;
    double h_;
};

/// Rhs is callable as rhs(double t, const Vec& y, Vec& dydt).
template <class Scalar, class Rhs>
class Dop853 {
public:
    using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    Dop853(Rhs rhs, double t0, Vec y0, double t_end, Options opt = {})
        : rhs_(std::move(rhs)), opt_(opt), t_(t0), t_end_(t_end), y_(std::move(y0)) {
        if (!(opt_.rtol > 0.0) || !(opt_.atol > 0.0))
            throw DomainError("Dop853: rtol and atol must be > 0");
        if (!(t_end_ >= t_)) throw DomainError("Dop853: integration runs forward only");
        const auto n = y_.size();
        for (auto& k : k_) k.resize(n);
        f_.resize(n);
        eval(t_, y_, f_);
        h_ = opt_.first_step > 0.0 ? opt_.first_step : initial_step();
        h_ = std::min(h_, opt_.max_step);
        t_old_ = t_;
        y_old_ = y_;
    }

    bool done() const noexcept { return t_ >= t_end_; }
    double t() const noexcept { return t_; }
    double t_old() const noexcept { return t_old_; }
    const Vec& y() const noexcept { return y_; }
    const Stats& stats() const noexcept { return stats_; }

    /// Advances by one accepted step.
    void step() {
        using namespace dop853;
        if (done()) return;
        if (stats_.accepted + stats_.rejected >= opt_.max_steps)
            throw NumericalError("Dop853: maximum number of steps exceeded");

        const double expo = 1.0 / 8.0 - opt_.pi_beta * 0.2;
        bool rejected = false;
        for (;;) {
            const double min_step =
                10.0 * std::abs(std::nextafter(t_, std::numeric_limits<double>::infinity()) - t_);
            if (h_ < min_step) throw StepSizeUnderflow(t_, h_);

            double h = h_;
            double t_new = t_ + h;
            if (t_new >= t_end_) {
                t_new = t_end_;
                h = t_new - t_;
            }

            // stages
            k_[0] = f_;
            for (int s = 1; s < kStages; ++s) {
                tmp_ = y_;
                for (int j = 0; j < s; ++j)
                    if (A[s][j] != 0.0) tmp_.noalias() += (h * A[s][j]) * k_[j];
                eval(t_ + C[s] * h, tmp_, k_[s]);
            }
            y_new_ = y_;
            for (int j = 0; j < kStages; ++j)
                if (B[j] != 0.0) y_new_.noalias() += (h * B[j]) * k_[j];
            eval(t_new, y_new_, k_[kStages]);

            const double err = error_norm(h);
            if (err <= 1.0) {
                const double fac11 = std::pow(err, expo);
                double fac = fac11 / std::pow(facold_, opt_.pi_beta);
                fac = std::clamp(fac / opt_.safety, 1.0 / opt_.max_factor, 1.0 / opt_.min_factor);
                double h_next = err == 0.0 ? h * opt_.max_factor : h / fac;
                if (rejected) h_next = std::min(h_next, h);
                facold_ = std::max(err, 1e-4);

                t_old_ = t_;
                y_old_.swap(y_);
                y_.swap(y_new_);
                f_ = k_[kStages];
                t_ = t_new;
                h_last_ = h;
                h_ = std::min(h_next, opt_.max_step);
                dense_ready_ = false;
                ++stats_.accepted;
                stats_.last_step = h;
                return;
            }
            const double fac11 = std::pow(err, expo);
            h_ = h / std::min(1.0 / opt_.min_factor, fac11 / opt_.safety);
            rejected = true;
            ++stats_.rejected;
        }
    }

    /// Interpolated solution for t in [t_old(), t()].
    Vec dense(double t) {
        if (t == t_) return y_;
        if (stats_.accepted == 0 || t < t_old_ || t > t_)
            throw DomainError("Dop853::dense: time outside the last accepted step");
        prepare_dense();
        const double x = (t - t_old_) / h_last_;
        Vec out = Vec::Zero(y_.size());
        for (int i = dop853::kInterpolatorPower - 1, j = 0; i >= 0; --i, ++j) {
            out += F_[i];
            out *= (j % 2 == 0) ? x : (1.0 - x);
        }
        out += y_old_;
        return out;
    }

private:
    void eval(double t, const Vec& y, Vec& out) {
        rhs_(t, y, out);
        ++stats_.rhs_evaluations;
    }

    static double rms(const Vec& v) {
        return v.size() == 0 ? 0.0 : v.norm() / std::sqrt(static_cast<double>(v.size()));
    }

    double initial_step() {
        const Eigen::VectorXd scale = (opt_.atol + y_.cwiseAbs().array() * opt_.rtol).matrix();
        const double d0 = rms(Vec((y_.array() / scale.array().template cast<Scalar>()).matrix()));
        const double d1 = rms(Vec((f_.array() / scale.array().template cast<Scalar>()).matrix()));
        const double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        Vec y1 = y_ + h0 * f_;
        Vec f1(y_.size());
        eval(t_ + h0, y1, f1);
        const double d2 =
            rms(Vec(((f1 - f_).array() / scale.array().template cast<Scalar>()).matrix())) / h0;
        const double h1 = (d1 <= 1e-15 && d2 <= 1e-15) ? std::max(1e-6, h0 * 1e-3)
                                                       : std::pow(0.01 / std::max(d1, d2), 1.0 / 8.0);
        return std::min(100.0 * h0, h1);
    }

    /// Combined 5th/3rd-order error estimate (RMS, scaled by the tolerances).
    double error_norm(double h) {
        using namespace dop853;
        const auto n = y_.size();
        err5_.setZero(n);
        err3_.setZero(n);
        for (int j = 0; j <= kStages; ++j) {
            if (E5[j] != 0.0) err5_.noalias() += E5[j] * k_[j];
            if (E3[j] != 0.0) err3_.noalias() += E3[j] * k_[j];
        }
        const Eigen::ArrayXd scale =
            opt_.atol + y_.cwiseAbs().array().max(y_new_.cwiseAbs().array()) * opt_.rtol;
        const double e5 = (err5_.cwiseAbs().array() / scale).matrix().squaredNorm();
        const double e3 = (err3_.cwiseAbs().array() / scale).matrix().squaredNorm();
        if (e5 == 0.0 && e3 == 0.0) return 0.0;
        const double denom = e5 + 0.01 * e3;
        return std::abs(h) * e5 / std::sqrt(denom * static_cast<double>(n));
    }

    void prepare_dense() {
        using namespace dop853;
        if (dense_ready_) return;
        const double h = h_last_;
        // k_[0] holds f(t_old) and k_[kStages] f(t) from the last accepted step.
        for (int s = kStages + 1; s < kStagesExtended; ++s) {
            tmp_ = y_old_;
            for (int j = 0; j < s; ++j)
                if (A[s][j] != 0.0) tmp_.noalias() += (h * A[s][j]) * k_[j];
            eval(t_old_ + C[s] * h, tmp_, k_[s]);
        }
        const Vec delta = y_ - y_old_;
        F_[0] = delta;
        F_[1] = h * k_[0] - delta;
        F_[2] = 2.0 * delta - h * (f_ + k_[0]);
        for (int i = 0; i < 4; ++i) {
            F_[3 + i].setZero(y_.size());
            for (int j = 0; j < kStagesExtended; ++j)
                if (D[i][j] != 0.0) F_[3 + i].noalias() += (h * D[i][j]) * k_[j];
        }
        dense_ready_ = true;
    }

    Rhs rhs_;
    Options opt_;
    double t_;
    double t_end_;
    double t_old_ = 0.0;
    double h_ = 0.0;
    double h_last_ = 0.0;
    double facold_ = 1e-4;
    Vec y_, y_old_, y_new_, f_, tmp_, err5_, err3_;
    std::array<Vec, dop853::kStagesExtended> k_;
    std::array<Vec, dop853::kInterpolatorPower> F_;
    bool dense_ready_ = false;
    Stats stats_;
};

/// Integrates from t0 to sample_times.back(), calling observe(t, y) at every
/// sample time (ascending, all >= t0) from dense output.
template <class Scalar, class Rhs, class Observer>
Stats integrate(Rhs rhs, double t0, Eigen::Matrix<Scalar, Eigen::Dynamic, 1> y0,
                std::span<const double> sample_times, Observer&& observe, const Options& opt = {}) {
    if (sample_times.empty()) throw DomainError("integrate: no sample times");
    if (!std::is_sorted(sample_times.begin(), sample_times.end()) || sample_times.front() < t0)
        throw DomainError("integrate: sample times must be ascending and >= t0");
    Dop853<Scalar, Rhs> solver(std::move(rhs), t0, std::move(y0), sample_times.back(), opt);
    std::size_t next = 0;
    while (next < sample_times.size() && sample_times[next] == t0) observe(t0, solver.y()), ++next;
    while (next < sample_times.size()) {
        solver.step();
        while (next < sample_times.size() && sample_times[next] <= solver.t()) {
            observe(sample_times[next], solver.dense(sample_times[next]));
            ++next;
        }
    }
    return solver.stats();
}

}  // namespace jcsense::ode
