#pragma once

// Closed-form quantities of the driven Jaynes-Cummings dark state as a
// function of the drive amplitude eta. No Hilbert space is involved except in
// qfi_from_state_derivative, which is the numerical cross-check route.
//
// Several expressions are written in cancellation-free form (for example
// var_n = eta^4 / (8 eps) instead of (eps^2 + 1)/(8 eps) - 1/4); both forms are
// algebraically identical and the tests check one against the other.

#include <cmath>
#include <complex>

#include "jcsense/errors.hpp"
#include "jcsense/fockspace.hpp"

namespace jcsense::analytic {

struct AnalyticPoint {
    double eta = 0.0;
    double epsilon = 1.0;  // 1 - eta^2
    double r = 0.0;        // squeezing parameter, <= 0
    double C = 1.0;        // qubit superposition coefficient
    double qfi = 0.0;
    double mean_n = 0.0;
    double var_n = 0.0;
    double chi = 0.0;  // d<N>/d eta
    double inv_var_n = 0.0;
    double inv_var_x2 = 0.0;
    double inv_var_p2 = 0.0;
    double mean_x2 = 0.25;
    double var_x2 = 0.125;
    double mean_p2 = 0.25;
    double var_p2 = 0.125;
};

inline void require_subcritical(double eta, const char* where) {
    if (!(eta >= 0.0 && eta < 1.0))
        throw DomainError(std::string(where) + ": eta must lie in [0, 1)");
}

/// 1 - eta^2 without cancellation near eta = 1.
inline double epsilon(double eta) { return (1.0 - eta) * (1.0 + eta); }

/// eta^2 / [2 (1 - eta^2)^2]
inline double qfi(double eta) {
    require_subcritical(eta, "qfi");
    const double eps = epsilon(eta);
    return eta * eta / (2.0 * eps * eps);
}

inline AnalyticPoint evaluate(double eta) {
    require_subcritical(eta, "evaluate");
    AnalyticPoint p;
    const double eps = epsilon(eta);
    const double root = std::sqrt(eps);
    const double eta2 = eta * eta;

    p.eta = eta;
    p.epsilon = eps;
    p.r = 0.25 * std::log(eps);
    p.C = fock::qubit_coefficient(eta);
    p.qfi = eta2 / (2.0 * eps * eps);

    // <N> = (2 - eta^2)/(4 sqrt eps) - 1/2 = (1 - sqrt eps)^2 / (4 sqrt eps)
    const double one_minus_root = eta2 / (1.0 + root);
    p.mean_n = one_minus_root * one_minus_root / (4.0 * root);
    // (dN)^2 = [(eps^2 + 1)/(8 eps)] - 1/4 = eta^4 / (8 eps)
    p.var_n = eta2 * eta2 / (8.0 * eps);
    p.chi = eta2 * eta / (4.0 * eps * root);

    p.mean_x2 = 0.25 / root;
    p.var_x2 = 0.125 / eps;
    p.mean_p2 = 0.25 * root;
    p.var_p2 = 0.125 * eps;

    // (d<X^2>/d eta)^2 / Var[X^2] and the P analogue
    const double dx2 = eta / (4.0 * eps * root);
    const double dp2 = -eta / (4.0 * root);
    if (eta > 0.0) {
        p.inv_var_n = p.chi * p.chi / p.var_n;
        p.inv_var_x2 = dx2 * dx2 / p.var_x2;
        p.inv_var_p2 = dp2 * dp2 / p.var_p2;
    }
    return p;
}

/// E_{n,+/-} = +/- sqrt(n) Omega (1 - eta^2)^{3/4}
inline double eigenvalue(double omega, double eta, int n, fock::Branch branch) {
    require_subcritical(eta, "eigenvalue");
    if (n < 1) throw DomainError("eigenvalue: n must be >= 1");
    if (branch == fock::Branch::dark) return 0.0;
    const double sign = branch == fock::Branch::plus ? 1.0 : -1.0;
    return sign * std::sqrt(static_cast<double>(n)) * omega * std::pow(epsilon(eta), 0.75);
}

/// Gap between the dark state and the n = 1 doublet.
inline double gap(double omega, double eta) {
    return eigenvalue(omega, eta, 1, fock::Branch::plus);
}

struct QfiDerivativeOptions {
    double h = 1e-4;
    int n_max = 0;  // 0: adaptive cutoff for eta + h
    fock::TruncationPolicy truncation{1e-20};
};

/// QFI from the pure-state formula 4 Re[<d phi|d phi> + (<d phi|phi>)^2], with
/// |d phi> = d|phi_r>/d eta from a central difference of squeezed_vacuum,
/// Richardson-extrapolated once (steps h and h/2). The squeezed vacuum depends on
/// eta only through eta^2, so the stencil may extend below eta = 0.
inline double qfi_from_state_derivative(double eta, const QfiDerivativeOptions& opt = {}) {
    const double h = opt.h;
    if (!(h > 0.0)) throw DomainError("qfi_from_state_derivative: h must be > 0");
    if (!(eta >= 0.0 && eta + h < 1.0))
        throw DomainError("qfi_from_state_derivative: need 0 <= eta and eta + h < 1");

    const int n_max = opt.n_max > 0 ? opt.n_max : fock::adaptive_n_max(eta + h, 0, opt.truncation);
    const auto spec = fock::HilbertSpec::field(n_max);
    auto state = [&](double x) {
        auto s = fock::squeezed_vacuum_at(spec, x);
        if (s.truncation_warning()) throw TruncationError(*s.truncation_warning());
        return s.amplitudes();
    };

    const fock::Vector center = state(eta);
    const fock::Vector d_coarse = (state(eta + h) - state(eta - h)) / (2.0 * h);
    const fock::Vector d_fine = (state(eta + h / 2) - state(eta - h / 2)) / h;
    const fock::Vector deriv = (4.0 * d_fine - d_coarse) / 3.0;

    const std::complex<double> overlap = deriv.dot(center);  // <d phi|phi>
    return 4.0 * std::real(deriv.squaredNorm() + overlap * overlap);
}

}  // namespace jcsense::analytic
