#pragma once

// Adiabatic ramp eta(t) = sqrt(1 - [(kt)^xi + 1]^{-1}) and the perturbative
// non-adiabatic transition estimates along it.

#include <cmath>
#include <limits>
#include <numbers>

#include "jcsense/errors.hpp"

namespace jcsense::ramp {

inline constexpr double kDefaultExponent = 4.0 / 3.0;

struct RampSchedule {
    double k = 1.0 / 200.0;  // rate, units of Omega
    double xi = kDefaultExponent;
    double eta_target = 0.995;

    void validate() const {
        if (!(k >= 0.0) || !std::isfinite(k)) throw DomainError("RampSchedule: k must be >= 0");
        if (!(xi > 0.0) || !std::isfinite(xi)) throw DomainError("RampSchedule: xi must be > 0");
        if (!(eta_target > 0.0 && eta_target < 1.0))
            throw DomainError("RampSchedule: eta_target must lie in (0, 1)");
    }
};

/// eps(t) = 1 - eta(t)^2 = [(kt)^xi + 1]^{-1}
inline double epsilon_at(const RampSchedule& s, double t) {
    if (!(t >= 0.0)) throw DomainError("epsilon_at: t must be >= 0");
    return 1.0 / (std::pow(s.k * t, s.xi) + 1.0);
}

inline double eta_at(const RampSchedule& s, double t) {
    if (!(t >= 0.0)) throw DomainError("eta_at: t must be >= 0");
    if (t == 0.0 || s.k == 0.0) return 0.0;
    const double u = std::pow(s.k * t, s.xi);
    return std::sqrt(u / (u + 1.0));
}

/// Exact derivative, written as (xi k / 2) (kt)^{xi/2 - 1} eps^{3/2}.
/// At t = 0 it is 0 for xi > 2, k for xi = 2 and +infinity for xi < 2
/// (the default xi = 4/3 starts with eta ~ (kt)^{2/3}).
inline double eta_dot_at(const RampSchedule& s, double t) {
    if (!(t >= 0.0)) throw DomainError("eta_dot_at: t must be >= 0");
    if (s.k == 0.0) return 0.0;
    if (t == 0.0) {
        if (s.xi > 2.0) return 0.0;
        if (s.xi == 2.0) return s.k;
        return std::numeric_limits<double>::infinity();
    }
    const double kt = s.k * t;
    const double eps = 1.0 / (std::pow(kt, s.xi) + 1.0);
    return 0.5 * s.xi * s.k * std::pow(kt, 0.5 * s.xi - 1.0) * eps * std::sqrt(eps);
}

/// Near-critical form (eta xi k / 2) (1 - eta^2)^{(xi + 1)/xi}.
inline double eta_dot_asymptotic(const RampSchedule& s, double eta) {
    const double eps = (1.0 - eta) * (1.0 + eta);
    return 0.5 * eta * s.xi * s.k * std::pow(eps, (s.xi + 1.0) / s.xi);
}

/// Inverse schedule: t(eta) = [eta^2 / (1 - eta^2)]^{1/xi} / k.
inline double time_at_eta(const RampSchedule& s, double eta) {
    if (!(eta >= 0.0 && eta < 1.0)) throw DomainError("time_at_eta: eta must lie in [0, 1)");
    if (!(s.k > 0.0)) throw DomainError("time_at_eta: k must be > 0");
    const double eps = (1.0 - eta) * (1.0 + eta);
    return std::pow(eta * eta / eps, 1.0 / s.xi) / s.k;
}

/// Time at which the schedule reaches eta_target.
inline double duration(const RampSchedule& s) { return time_at_eta(s, s.eta_target); }

/// Bound (k / (3 sqrt2 Omega))^2 on every P_{n,+/-} for xi = 4/3.
inline double transition_bound(double k, double omega) {
    const double x = k / (3.0 * std::numbers::sqrt2 * omega);
    return x * x;
}

/// Perturbative estimate of the leakage into the n-th doublet at drive eta,
///   P_n ~ | etadot eta e^{-n eta^2/2} (sqrt(n) eta)^{n-2}
///           / (2 sqrt2 n Omega (1 - eta^2)^{7/4} sqrt((n-1)!)) |^2,
/// with etadot the exact ramp derivative at t(eta). This is an
/// order-of-magnitude diagnostic; the +/- sign only enters the phase.
/// Evaluated in log space so that large n stays finite.
inline double transition_probability(const RampSchedule& s, double omega, double eta, int n) {
    if (!(eta > 0.0 && eta < 1.0)) throw DomainError("transition_probability: eta must lie in (0, 1)");
    if (n < 1) throw DomainError("transition_probability: n must be >= 1");
    if (!(omega > 0.0)) throw DomainError("transition_probability: Omega must be > 0");
    if (!(s.k > 0.0)) return 0.0;

    const double nn = static_cast<double>(n);
    const double eps = (1.0 - eta) * (1.0 + eta);
    const double etadot = eta_dot_at(s, time_at_eta(s, eta));
    const double log_amp = std::log(etadot) + std::log(eta) - 0.5 * nn * eta * eta +
                           (nn - 2.0) * std::log(std::sqrt(nn) * eta) -
                           std::log(2.0 * std::numbers::sqrt2 * nn * omega) - 1.75 * std::log(eps) -
                           0.5 * std::lgamma(nn);
    return std::exp(2.0 * log_amp);
}

/// Level dependence of the near-critical estimate: e^{-n/2} n^{(n-3)/2} / sqrt(n!).
inline double level_prefactor(int n) {
    if (n < 1) throw DomainError("level_prefactor: n must be >= 1");
    const double nn = static_cast<double>(n);
    return std::exp(-0.5 * nn + 0.5 * (nn - 3.0) * std::log(nn) - 0.5 * std::lgamma(nn + 1.0));
}

}  // namespace jcsense::ramp
