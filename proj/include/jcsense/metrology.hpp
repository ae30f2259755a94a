#pragma once

// Estimation side of the sensor: per-observable inverted variances from
// simulated field states, finite-shot measurement sampling, the
// method-of-moments estimator for eta, Cramer-Rao comparisons and the
// near-critical scaling fits.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "jcsense/analytic.hpp"
#include "jcsense/errors.hpp"
#include "jcsense/fockspace.hpp"
#include "jcsense/ramp.hpp"

namespace jcsense::metrology {

using fock::cplx;
using fock::Vector;

enum class Observable { photon_number, x_squared, p_squared };

inline std::string_view to_string(Observable o) {
    switch (o) {
        case Observable::photon_number: return "photon_number";
        case Observable::x_squared: return "x_squared";
        case Observable::p_squared: return "p_squared";
    }
    return "?";
}

inline Observable parse_observable(std::string_view s) {
    if (s == "photon_number") return Observable::photon_number;
    if (s == "x_squared") return Observable::x_squared;
    if (s == "p_squared") return Observable::p_squared;
    throw DomainError("unknown observable '" + std::string(s) + "'");
}

struct MeasurementScheme {
    Observable kind = Observable::photon_number;
    std::size_t shots = 1;  // nu, independent repetitions

    void validate() const {
        if (shots < 1) throw DomainError("MeasurementScheme: shots must be >= 1");
    }
};

// ---------------------------------------------------------------------------
// Moments and inverted variances.

struct Moments {
    double mean = 0.0;
    double variance = 0.0;
};

/// Mean and variance of N, X^2 or P^2 in a field-only state.
inline Moments observable_moments(const fock::StateVector& state, Observable kind) {
    if (state.spec().with_qubit) throw DomainError("observable_moments: needs a field-only state");
    const Vector& psi = state.amplitudes();
    const double norm2 = psi.squaredNorm();
    Moments m;
    if (kind == Observable::photon_number) {
        double s1 = 0.0, s2 = 0.0;
        for (int n = 0; n <= state.spec().n_max; ++n) {
            const double p = std::norm(psi[n]);
            s1 += n * p;
            s2 += static_cast<double>(n) * n * p;
        }
        m.mean = s1 / norm2;
        m.variance = s2 / norm2 - m.mean * m.mean;
        return m;
    }
    const auto q = kind == Observable::x_squared ? fock::quadrature_x(state.spec())
                                                 : fock::quadrature_p(state.spec());
    const Vector once = q.apply(psi);
    const Vector twice = q.apply(once);
    m.mean = once.squaredNorm() / norm2;            // <Q^2>
    m.variance = twice.squaredNorm() / norm2 - m.mean * m.mean;  // <Q^4> - <Q^2>^2
    return m;
}

/// Closed-form <O> of the squeezed vacuum at eta.
inline double analytic_mean(Observable kind, double eta) {
    const auto p = analytic::evaluate(eta);
    switch (kind) {
        case Observable::photon_number: return p.mean_n;
        case Observable::x_squared: return p.mean_x2;
        case Observable::p_squared: return p.mean_p2;
    }
    return 0.0;
}

struct InvertedVarianceOptions {
    double d_eta = 1e-4;
    int n_max = 0;  // 0: adaptive
    fock::TruncationPolicy truncation{1e-20};
};

/// (d<O>/d eta)^2 / Var[O] from squeezed vacua rebuilt at eta +- d_eta and
/// eta +- d_eta/2 (one Richardson pass). Throws DomainError when Var[O] = 0.
inline double inverted_variance_numeric(double eta, Observable kind, const InvertedVarianceOptions& opt = {}) {
    const double h = opt.d_eta;
    if (!(h > 0.0)) throw DomainError("inverted_variance_numeric: d_eta must be > 0");
    if (!(eta >= 0.0 && eta + h < 1.0)) throw DomainError("inverted_variance_numeric: need 0 <= eta and eta + d_eta < 1");

    const int n_max = opt.n_max > 0 ? opt.n_max : fock::adaptive_n_max(eta + h, 0, opt.truncation);
    const auto spec = fock::HilbertSpec::field(n_max);
    // The squeezed vacuum depends on eta^2 only, so eta - h < 0 is fine.
    auto moments_at = [&](double x) { return observable_moments(fock::squeezed_vacuum_at(spec, x), kind); };

    const Moments center = moments_at(eta);
    if (!(center.variance > 0.0)) throw DomainError("inverted_variance_numeric: Var[O] vanishes, ratio undefined");
    const double coarse = (moments_at(eta + h).mean - moments_at(eta - h).mean) / (2.0 * h);
    const double fine = (moments_at(eta + h / 2).mean - moments_at(eta - h / 2).mean) / h;
    const double slope = (4.0 * fine - coarse) / 3.0;
    return slope * slope / center.variance;
}

// ---------------------------------------------------------------------------
// Sampling.

/// SplitMix64 finalizer; maps (seed, stream) pairs to generator seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Seeding contract: stream `stream` of seed `seed` runs std::mt19937_64
/// seeded with splitmix64(seed ^ splitmix64(stream)).
inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream) {
    return std::mt19937_64(splitmix64(seed ^ splitmix64(stream)));
}

/// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Normalized Hermite functions psi_n(q), n = 0..n_max, with e^{-q^2/2}
/// carried as a separate log scale so large |q| does not underflow early.
inline void hermite_functions(double q, int n_max, std::vector<double>& out) {
    out.assign(n_max + 1, 0.0);
    double log_scale = -0.5 * q * q - 0.25 * std::log(std::numbers::pi);
    double prev = 0.0, cur = 1.0;
    std::vector<double> mant(n_max + 1);
    std::vector<double> scale(n_max + 1);
    mant[0] = cur;
    scale[0] = log_scale;
    for (int n = 0; n < n_max; ++n) {
        const double next = std::sqrt(2.0 / (n + 1)) * q * cur - std::sqrt(static_cast<double>(n) / (n + 1)) * prev;
        prev = cur;
        cur = next;
        const double mag = std::abs(cur);
        if (mag > 1e100) {
            const double l = std::log(mag);
            cur /= mag;
            prev /= mag;
            log_scale += l;
        }
        mant[n + 1] = cur;
        scale[n + 1] = log_scale;
    }
    for (int n = 0; n <= n_max; ++n) out[n] = mant[n] * std::exp(scale[n]);
}

/// Quadrature grid resolution and extent.
struct QuadratureGrid {
    int points = 4096;
    double width_sigmas = 6.0;  // half-width L = width_sigmas * sqrt(<Q^2>)
};

/// Precomputed outcome distribution of one scheme on one field state.
class OutcomeSampler {
public:
    OutcomeSampler(const fock::StateVector& state, Observable kind, QuadratureGrid grid = {})
        : kind_(kind) {
        if (state.spec().with_qubit) throw DomainError("OutcomeSampler: needs a field-only state");
        if (std::abs(state.norm() - 1.0) > 1e-10) throw DomainError("OutcomeSampler: state must be normalized");
        if (kind == Observable::photon_number)
            build_photon(state);
        else
            build_quadrature(state, grid);
    }

    Observable kind() const noexcept { return kind_; }
    /// Total probability mass captured by the outcome table.
    double mass() const noexcept { return mass_; }
    const std::optional<std::string>& warning() const noexcept { return warning_; }

    /// nu outcomes from stream `stream` of `seed`.
    std::vector<double> draw(std::size_t shots, std::uint64_t seed, std::uint64_t stream = 0) const {
        auto rng = make_stream(seed, stream);
        std::vector<double> out(shots);
        for (auto& v : out) v = draw_one(rng);
        return out;
    }

    /// Sample mean of nu outcomes without materializing them.
    double draw_mean(std::size_t shots, std::uint64_t seed, std::uint64_t stream = 0) const {
        auto rng = make_stream(seed, stream);
        double sum = 0.0;
        for (std::size_t i = 0; i < shots; ++i) sum += draw_one(rng);
        return sum / static_cast<double>(shots);
    }

private:
    double draw_one(std::mt19937_64& rng) const {
        const double u = uniform01(rng) * cdf_.back();
        const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        const auto j = static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cdf_.begin(), cdf_.size() - 1));
        if (kind_ == Observable::photon_number) return static_cast<double>(j);
        const double x = x0_ + dx_ * (static_cast<double>(j) + uniform01(rng) - 0.5);
        return x * x;
    }

    void build_photon(const fock::StateVector& state) {
        cdf_.resize(state.spec().field_dim());
        double acc = 0.0;
        for (int n = 0; n <= state.spec().n_max; ++n) cdf_[n] = (acc += std::norm(state.amplitude(n)));
        mass_ = acc;
    }

    void build_quadrature(const fock::StateVector& state, QuadratureGrid grid) {
        if (grid.points < 2048) throw DomainError("OutcomeSampler: quadrature grid needs >= 2048 points");
        const Moments m = observable_moments(state, kind_);
        const double half = grid.width_sigmas * std::sqrt(m.mean);
        x0_ = -half;
        dx_ = 2.0 * half / (grid.points - 1);
        const int n_max = state.spec().n_max;

        // <x|n> for X = (a + a^dagger)/2 is 2^{1/4} psi_n(sqrt2 x); in the P
        // representation the coefficients pick up (-i)^n.
        std::vector<cplx> coeff(n_max + 1);
        for (int n = 0; n <= n_max; ++n) {
            cplx phase = 1.0;
            if (kind_ == Observable::p_squared) {
                static constexpr cplx cycle[4] = {{1, 0}, {0, -1}, {-1, 0}, {0, 1}};
                phase = cycle[n % 4];
            }
            coeff[n] = phase * state.amplitude(n);
        }
        const double norm_factor = std::pow(2.0, 0.25);
        std::vector<double> herm;
        cdf_.resize(grid.points);
        double acc = 0.0;
        for (int j = 0; j < grid.points; ++j) {
            const double x = x0_ + dx_ * j;
            hermite_functions(std::numbers::sqrt2 * x, n_max, herm);
            cplx amp = 0.0;
            for (int n = 0; n <= n_max; ++n) amp += coeff[n] * herm[n];
            acc += std::norm(norm_factor * amp) * dx_;
            cdf_[j] = acc;
        }
        mass_ = acc;
        if (mass_ < 1.0 - 1e-8 || mass_ > 1.0 + 1e-10) {
            warning_ = "quadrature grid captures probability mass " + std::to_string(mass_) +
                       ", outside [1 - 1e-8, 1]";
        }
    }

    Observable kind_;
    std::vector<double> cdf_;
    double x0_ = 0.0;
    double dx_ = 0.0;
    double mass_ = 0.0;
    std::optional<std::string> warning_;
};

struct Outcomes {
    std::vector<double> values;
    std::optional<std::string> warning;
};

/// nu outcomes of the scheme's observable on a field state, deterministic in seed.
inline Outcomes sample_outcomes(const fock::StateVector& state, const MeasurementScheme& scheme, std::uint64_t seed) {
    scheme.validate();
    const OutcomeSampler sampler(state, scheme.kind);
    return {sampler.draw(scheme.shots, seed), sampler.warning()};
}

// ---------------------------------------------------------------------------
// Estimation.

inline constexpr double kEtaCeiling = 1.0 - 1e-9;

struct EtaEstimate {
    double eta = 0.0;
    bool clipped = false;  // sample mean fell outside the invertible range
};

/// eta whose closed-form <O>(eta) equals `mean`, clipped to [0, 1 - 1e-9].
inline EtaEstimate invert_mean(Observable kind, double mean) {
    auto from_root = [](double root) {  // root = sqrt(1 - eta^2)
        const double eps = root * root;
        return std::sqrt(std::max(0.0, 1.0 - eps));
    };
    auto clip = [](double eta, bool flagged) -> EtaEstimate {
        if (eta > kEtaCeiling) return {kEtaCeiling, true};
        return {eta, flagged};
    };
    switch (kind) {
        case Observable::photon_number: {
            // <N> = (1 - s)^2 / (4 s), s = sqrt(1 - eta^2): s^2 - (2 + 4m) s + 1 = 0.
            if (mean <= 0.0) return {0.0, mean < 0.0};
            const double b = 1.0 + 2.0 * mean;
            const double one_minus_s = 2.0 * std::sqrt(mean * (1.0 + mean)) - 2.0 * mean;
            const double s = b - std::sqrt(b * b - 1.0);
            const double eps = one_minus_s * (1.0 + s);  // (1 - s)(1 + s)
            return clip(std::sqrt(std::max(0.0, eps)), false);
        }
        case Observable::x_squared: {
            // <X^2> = 1/(4 s)
            if (mean <= 0.25) return {0.0, mean < 0.25};
            return clip(from_root(0.25 / mean), false);
        }
        case Observable::p_squared: {
            // <P^2> = s/4, decreasing in eta
            if (mean >= 0.25) return {0.0, mean > 0.25};
            if (mean <= 0.0) return {kEtaCeiling, true};
            return clip(from_root(4.0 * mean), false);
        }
    }
    return {};
}

/// Method-of-moments estimate from raw outcomes.
inline EtaEstimate estimate_eta(std::span<const double> outcomes, const MeasurementScheme& scheme) {
    if (outcomes.empty()) throw DomainError("estimate_eta: no outcomes");
    double sum = 0.0;
    for (double v : outcomes) sum += v;
    return invert_mean(scheme.kind, sum / static_cast<double>(outcomes.size()));
}

struct CramerRaoResult {
    double eta = 0.0;
    std::size_t shots = 0;
    std::size_t replicas = 0;
    double qfi = 0.0;
    double mean_estimate = 0.0;
    double var_estimate = 0.0;  // unbiased replica variance of eta-hat
    double ratio = 0.0;         // nu Var[eta-hat] I_eta
    double ratio_stderr = 0.0;  // ratio * sqrt(2 / (replicas - 1))
    std::size_t clipped = 0;
    std::optional<std::string> warning;
};

/// Monte-Carlo replicas of the estimator at true eta; replica i uses stream i.
inline CramerRaoResult cramer_rao_study(double eta, const MeasurementScheme& scheme, std::size_t replicas,
                                        std::uint64_t seed, int n_max = 0) {
    scheme.validate();
    if (replicas < 2) throw DomainError("cramer_rao_study: need >= 2 replicas");
    if (!(eta > 0.0 && eta < 1.0)) throw DomainError("cramer_rao_study: eta must lie in (0, 1)");
    const int cutoff = n_max > 0 ? n_max : fock::adaptive_n_max(eta, 0, fock::TruncationPolicy{1e-20});
    const auto state = fock::squeezed_vacuum_at(fock::HilbertSpec::field(cutoff), eta);
    const OutcomeSampler sampler(state, scheme.kind);

    CramerRaoResult res;
    res.eta = eta;
    res.shots = scheme.shots;
    res.replicas = replicas;
    res.qfi = analytic::qfi(eta);
    res.warning = sampler.warning();

    std::vector<double> estimates(replicas);
    for (std::size_t i = 0; i < replicas; ++i) {
        const EtaEstimate est = invert_mean(scheme.kind, sampler.draw_mean(scheme.shots, seed, i));
        estimates[i] = est.eta;
        res.clipped += est.clipped ? 1 : 0;
    }
    double mean = 0.0;
    for (double e : estimates) mean += e;
    mean /= static_cast<double>(replicas);
    double ss = 0.0;
    for (double e : estimates) ss += (e - mean) * (e - mean);
    res.mean_estimate = mean;
    res.var_estimate = ss / static_cast<double>(replicas - 1);
    res.ratio = static_cast<double>(scheme.shots) * res.var_estimate * res.qfi;
    res.ratio_stderr = res.ratio * std::sqrt(2.0 / static_cast<double>(replicas - 1));
    return res;
}

// ---------------------------------------------------------------------------
// Near-critical scaling along the ramp.

enum class ScalingQuantity { inverted_variance, mean_n, epsilon };

inline std::string_view to_string(ScalingQuantity q) {
    switch (q) {
        case ScalingQuantity::inverted_variance: return "inverted_variance";
        case ScalingQuantity::mean_n: return "mean_n";
        case ScalingQuantity::epsilon: return "epsilon";
    }
    return "?";
}

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

inline LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw DomainError("least_squares: need >= 2 paired points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r_squared = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
    return f;
}

inline std::vector<double> log_space(double lo, double hi, int count) {
    if (!(lo > 0.0 && hi > lo) || count < 2) throw DomainError("log_space: need 0 < lo < hi and count >= 2");
    std::vector<double> v(count);
    const double a = std::log(lo), b = std::log(hi);
    for (int i = 0; i < count; ++i) v[i] = std::exp(a + (b - a) * i / (count - 1));
    v.front() = lo;
    v.back() = hi;
    return v;
}

struct ScalingFit {
    ScalingQuantity quantity = ScalingQuantity::inverted_variance;
    double fitted_exponent = 0.0;
    double expected_exponent = 0.0;
    double r_squared = 0.0;
};

struct ScalingRow {
    double kt = 0.0;
    double t = 0.0;
    double eta = 0.0;
    double epsilon = 0.0;
    double inverted_variance = 0.0;
    double mean_n = 0.0;
    double heisenberg_ratio = 0.0;  // F / (<N> t^2)
    double delta_eta = 0.0;         // 1 / sqrt(F)
};

struct ScalingReport {
    std::vector<ScalingRow> rows;
    std::vector<ScalingFit> fits;
    /// max/min - 1 of F / (<N> t^2) over kt in the top decade.
    double heisenberg_spread = 0.0;
};

/// Closed-form quantities at eta(kt) for each kt, log-log slopes against kt,
/// and the spread of F / (<N> t^2) over the top decade of kt.
inline ScalingReport scaling_experiment(const ramp::RampSchedule& schedule, std::span<const double> kt_points) {
    if (std::abs(schedule.xi - ramp::kDefaultExponent) > 1e-12)
        throw DomainError("scaling_experiment: requires xi = 4/3");
    if (!(schedule.k > 0.0)) throw DomainError("scaling_experiment: k must be > 0");
    if (kt_points.size() < 8) throw DomainError("scaling_experiment: need >= 8 kt points");
    for (double kt : kt_points)
        if (!(kt >= 10.0)) throw DomainError("scaling_experiment: every kt must be >= 10");

    ScalingReport rep;
    std::vector<double> lx, lf, ln, le;
    for (double kt : kt_points) {
        ScalingRow row;
        row.kt = kt;
        row.t = kt / schedule.k;
        row.epsilon = ramp::epsilon_at(schedule, row.t);
        row.eta = ramp::eta_at(schedule, row.t);
        const auto p = analytic::evaluate(row.eta);
        row.inverted_variance = p.inv_var_n;
        row.mean_n = p.mean_n;
        row.heisenberg_ratio = row.inverted_variance / (row.mean_n * row.t * row.t);
        row.delta_eta = 1.0 / std::sqrt(row.inverted_variance);
        rep.rows.push_back(row);
        lx.push_back(std::log(kt));
        lf.push_back(std::log(row.inverted_variance));
        ln.push_back(std::log(row.mean_n));
        le.push_back(std::log(row.epsilon));
    }
    auto add = [&](ScalingQuantity q, const std::vector<double>& ly, double expected) {
        const auto f = least_squares(lx, ly);
        rep.fits.push_back({q, f.slope, expected, f.r_squared});
    };
    add(ScalingQuantity::inverted_variance, lf, 8.0 / 3.0);
    add(ScalingQuantity::mean_n, ln, 2.0 / 3.0);
    add(ScalingQuantity::epsilon, le, -4.0 / 3.0);

    const double kt_max = *std::max_element(kt_points.begin(), kt_points.end());
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& row : rep.rows) {
        if (row.kt < kt_max / 10.0 * (1.0 - 1e-12)) continue;
        lo = std::min(lo, row.heisenberg_ratio);
        hi = std::max(hi, row.heisenberg_ratio);
    }
    rep.heisenberg_spread = hi / lo - 1.0;
    return rep;
}

}  // namespace jcsense::metrology
