#pragma once

// Truncated qubit (x) photon Hilbert space for the driven Jaynes-Cummings
// model: basis conventions, sparse operators and exact eigenstate
// constructors.
//
// Basis ordering is field-fast, qubit-slow: composite index = q * (n_max + 1) + n
// with q = 0 for |g> and q = 1 for |e>. A field-only space uses index = n.

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <unsupported/Eigen/MatrixFunctions>

#include "jcsense/errors.hpp"

namespace jcsense::fock {

using cplx = std::complex<double>;
using Vector = Eigen::VectorXcd;
using DenseMatrix = Eigen::MatrixXcd;
using SparseMatrix = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

inline constexpr const char* kBasisOrder = "field-fast";

/// States whose top-decile Fock mass exceeds this carry a truncation warning.
inline constexpr double kTailTolerance = 1e-10;

enum class Qubit { g = 0, e = 1 };

struct HilbertSpec {
    int n_max = 1;
    bool with_qubit = false;

    static HilbertSpec field(int n_max) { return checked({n_max, false}); }
    static HilbertSpec composite(int n_max) { return checked({n_max, true}); }

    int field_dim() const noexcept { return n_max + 1; }
    int dim() const noexcept { return with_qubit ? 2 * field_dim() : field_dim(); }

    int index(int n, Qubit q = Qubit::g) const noexcept {
        return (with_qubit ? static_cast<int>(q) * field_dim() : 0) + n;
    }

    /// Number of Fock levels counted as the truncation tail (top 10%).
    int tail_levels() const noexcept {
        return std::max(1, static_cast<int>(std::ceil(0.1 * field_dim())));
    }

    void validate() const {
        if (n_max < 1) throw DomainError("HilbertSpec: n_max must be >= 1");
    }

    friend bool operator==(const HilbertSpec&, const HilbertSpec&) = default;

private:
    static HilbertSpec checked(HilbertSpec s) {
        s.validate();
        return s;
    }
};

/// Sum of |amplitude|^2 over the top 10% of Fock levels (both qubit blocks).
inline double tail_mass(const HilbertSpec& spec, const Vector& amps) {
    const int first = spec.field_dim() - spec.tail_levels();
    double mass = 0.0;
    const int blocks = spec.with_qubit ? 2 : 1;
    for (int q = 0; q < blocks; ++q)
        for (int n = first; n <= spec.n_max; ++n)
            mass += std::norm(amps[q * spec.field_dim() + n]);
    return mass;
}

class StateVector {
public:
    StateVector(HilbertSpec spec, Vector amplitudes, bool normalize = true)
        : spec_(spec), amps_(std::move(amplitudes)) {
        spec_.validate();
        if (amps_.size() != spec_.dim())
            throw DomainError("StateVector: amplitude length does not match the Hilbert space");
        if (normalize) {
            const double nrm = amps_.norm();
            if (!(nrm > 0.0) || !std::isfinite(nrm))
                throw DomainError("StateVector: cannot normalize a zero or non-finite vector");
            amps_ /= nrm;
        }
        const double tail = tail_mass();
        if (tail > kTailTolerance) {
            warning_ = "truncation: top-decile Fock mass " + std::to_string(tail) +
                       " exceeds " + std::to_string(kTailTolerance) + " at n_max=" +
                       std::to_string(spec_.n_max);
        }
    }

    static StateVector fock(HilbertSpec spec, int n, Qubit q = Qubit::g) {
        spec.validate();
        if (n < 0 || n > spec.n_max) throw DomainError("fock: level outside truncation");
        Vector v = Vector::Zero(spec.dim());
        v[spec.index(n, q)] = 1.0;
        return StateVector(spec, std::move(v));
    }

    const HilbertSpec& spec() const noexcept { return spec_; }
    const Vector& amplitudes() const noexcept { return amps_; }
    int dim() const noexcept { return spec_.dim(); }

    cplx amplitude(int n, Qubit q = Qubit::g) const { return amps_[spec_.index(n, q)]; }

    double norm() const { return amps_.norm(); }
    double tail_mass() const { return jcsense::fock::tail_mass(spec_, amps_); }

    /// Population of Fock level n, traced over the qubit.
    double fock_population(int n) const {
        double p = std::norm(amps_[spec_.index(n, Qubit::g)]);
        if (spec_.with_qubit) p += std::norm(amps_[spec_.index(n, Qubit::e)]);
        return p;
    }

    /// Field amplitudes conditioned on the qubit state (field-only: q is ignored).
    Vector field_block(Qubit q = Qubit::g) const {
        return amps_.segment(spec_.index(0, q), spec_.field_dim());
    }

    /// <this|other>
    cplx inner(const StateVector& other) const {
        if (!(other.spec_ == spec_)) throw DomainError("inner: Hilbert spaces differ");
        return amps_.dot(other.amps_);
    }

    /// Zero-pads the state into a larger cutoff.
    StateVector embedded(int n_max) const {
        if (n_max < spec_.n_max) throw DomainError("embedded: cannot shrink the cutoff");
        HilbertSpec big{n_max, spec_.with_qubit};
        Vector v = Vector::Zero(big.dim());
        const int blocks = spec_.with_qubit ? 2 : 1;
        for (int q = 0; q < blocks; ++q)
            v.segment(q * big.field_dim(), spec_.field_dim()) =
                amps_.segment(q * spec_.field_dim(), spec_.field_dim());
        return StateVector(big, std::move(v), false);
    }

    const std::optional<std::string>& truncation_warning() const noexcept { return warning_; }

private:
    HilbertSpec spec_;
    Vector amps_;
    std::optional<std::string> warning_;
};

class SparseOperator {
public:
    SparseOperator(HilbertSpec spec, SparseMatrix m) : spec_(spec), m_(std::move(m)) {
        spec_.validate();
        if (m_.rows() != spec_.dim() || m_.cols() != spec_.dim())
            throw DomainError("SparseOperator: matrix shape does not match the Hilbert space");
        m_.makeCompressed();
    }

    static SparseOperator identity(HilbertSpec spec) {
        SparseMatrix id(spec.dim(), spec.dim());
        id.setIdentity();
        return {spec, std::move(id)};
    }

    const HilbertSpec& spec() const noexcept { return spec_; }
    const SparseMatrix& matrix() const noexcept { return m_; }
    int dim() const noexcept { return spec_.dim(); }

    Vector apply(const Vector& v) const { return m_ * v; }
    Vector apply(const StateVector& s) const { return m_ * s.amplitudes(); }

    /// out = M v, without allocating when out is already sized.
    void apply_to(const Vector& v, Vector& out) const { out.noalias() = m_ * v; }

    cplx expectation(const StateVector& s) const {
        return s.amplitudes().dot(m_ * s.amplitudes());
    }

    SparseOperator adjoint() const { return {spec_, SparseMatrix(m_.adjoint())}; }

    /// max |M - M^dagger| over all entries.
    double hermiticity_defect() const {
        const SparseMatrix diff = m_ - SparseMatrix(m_.adjoint());
        double worst = 0.0;
        for (int k = 0; k < diff.outerSize(); ++k)
            for (SparseMatrix::InnerIterator it(diff, k); it; ++it)
                worst = std::max(worst, std::abs(it.value()));
        return worst;
    }

    bool is_hermitian(double tol = 1e-12) const { return hermiticity_defect() <= tol; }

    DenseMatrix to_dense() const { return DenseMatrix(m_); }

    cplx at(int row, int col) const { return m_.coeff(row, col); }

    friend SparseOperator operator+(const SparseOperator& x, const SparseOperator& y) {
        require_same(x, y);
        return {x.spec_, SparseMatrix(x.m_ + y.m_)};
    }
    friend SparseOperator operator-(const SparseOperator& x, const SparseOperator& y) {
        require_same(x, y);
        return {x.spec_, SparseMatrix(x.m_ - y.m_)};
    }
    friend SparseOperator operator*(const SparseOperator& x, const SparseOperator& y) {
        require_same(x, y);
        return {x.spec_, SparseMatrix(x.m_ * y.m_)};
    }
    friend SparseOperator operator*(cplx c, const SparseOperator& x) {
        return {x.spec_, SparseMatrix(c * x.m_)};
    }

private:
    static void require_same(const SparseOperator& x, const SparseOperator& y) {
        if (!(x.spec_ == y.spec_)) throw DomainError("SparseOperator: Hilbert spaces differ");
    }

    HilbertSpec spec_;
    SparseMatrix m_;
};

namespace detail {

/// Lifts a field-space matrix to the full space (identity on the qubit).
inline SparseMatrix lift(const HilbertSpec& spec, const std::vector<Eigen::Triplet<cplx>>& field) {
    std::vector<Eigen::Triplet<cplx>> t;
    const int blocks = spec.with_qubit ? 2 : 1;
    t.reserve(field.size() * blocks);
    for (int q = 0; q < blocks; ++q) {
        const int off = q * spec.field_dim();
        for (const auto& e : field) t.emplace_back(e.row() + off, e.col() + off, e.value());
    }
    SparseMatrix m(spec.dim(), spec.dim());
    m.setFromTriplets(t.begin(), t.end());
    return m;
}

inline DenseMatrix field_annihilation_dense(int n_max) {
    DenseMatrix a = DenseMatrix::Zero(n_max + 1, n_max + 1);
    for (int n = 1; n <= n_max; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
    return a;
}

inline Vector field_fock(int n_max, int n) {
    Vector v = Vector::Zero(n_max + 1);
    v[n] = 1.0;
    return v;
}

}  // namespace detail

struct LadderOps {
    SparseOperator a;
    SparseOperator a_dagger;
};

/// a|n> = sqrt(n)|n-1>, a^dagger|n> = sqrt(n+1)|n+1>, a^dagger|n_max> = 0.
inline LadderOps build_ladder_ops(const HilbertSpec& spec) {
    spec.validate();
    std::vector<Eigen::Triplet<cplx>> lower;
    lower.reserve(spec.n_max);
    for (int n = 1; n <= spec.n_max; ++n)
        lower.emplace_back(n - 1, n, std::sqrt(static_cast<double>(n)));
    SparseOperator a(spec, detail::lift(spec, lower));
    SparseOperator ad = a.adjoint();
    return {std::move(a), std::move(ad)};
}

inline SparseOperator number_op(const HilbertSpec& spec) {
    spec.validate();
    std::vector<Eigen::Triplet<cplx>> diag;
    for (int n = 1; n <= spec.n_max; ++n) diag.emplace_back(n, n, static_cast<double>(n));
    return {spec, detail::lift(spec, diag)};
}

/// X = (a^dagger + a) / 2
inline SparseOperator quadrature_x(const HilbertSpec& spec) {
    auto [a, ad] = build_ladder_ops(spec);
    return cplx(0.5) * (a + ad);
}

/// P = i (a^dagger - a) / 2
inline SparseOperator quadrature_p(const HilbertSpec& spec) {
    auto [a, ad] = build_ladder_ops(spec);
    return cplx(0.0, 0.5) * (ad - a);
}

/// H = Omega * (coupling + eta * drive), split so that a ramp only rescales `drive`.
struct HamiltonianParts {
    double omega = 1.0;
    SparseOperator coupling;  // a^dagger |g><e| + a |e><g|
    SparseOperator drive;     // (a^dagger + a) / 2

    SparseOperator at(double eta) const {
        return cplx(omega) * (coupling + cplx(eta) * drive);
    }
};

inline HamiltonianParts build_hamiltonian_parts(const HilbertSpec& spec, double omega) {
    spec.validate();
    if (!spec.with_qubit) throw DomainError("build_hamiltonian: requires the composite qubit-field space");
    std::vector<Eigen::Triplet<cplx>> t;
    for (int n = 1; n <= spec.n_max; ++n) {
        const double s = std::sqrt(static_cast<double>(n));
        // a^dagger |g><e| : e-block column n-1 -> g-block row n
        t.emplace_back(spec.index(n, Qubit::g), spec.index(n - 1, Qubit::e), s);
        // a |e><g| : g-block column n -> e-block row n-1
        t.emplace_back(spec.index(n - 1, Qubit::e), spec.index(n, Qubit::g), s);
    }
    SparseMatrix coupling(spec.dim(), spec.dim());
    coupling.setFromTriplets(t.begin(), t.end());
    return {omega, SparseOperator(spec, std::move(coupling)), quadrature_x(spec)};
}

/// H_I = Omega [a^dagger |g><e| + a |e><g| + eta (a^dagger + a)/2]
inline SparseOperator build_hamiltonian(const HilbertSpec& spec, double omega, double eta) {
    if (!(eta >= 0.0)) throw DomainError("build_hamiltonian: eta must be >= 0");
    return build_hamiltonian_parts(spec, omega).at(eta);
}

/// Eigenvalues of a Hermitian operator in ascending order.
inline Eigen::VectorXd hermitian_spectrum(const SparseOperator& h) {
    Eigen::SelfAdjointEigenSolver<DenseMatrix> solver(h.to_dense(), Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw NumericalError("hermitian_spectrum: eigensolver failed");
    return solver.eigenvalues();
}

// ---------------------------------------------------------------------------
// Squeezing and displacement on the field mode.

/// r = ln(1 - eta^2) / 4; even in eta, diverges at |eta| = 1.
inline double squeezing_parameter(double eta) {
    if (!(std::abs(eta) < 1.0)) throw DomainError("squeezing_parameter: |eta| must be < 1");
    return 0.25 * std::log1p(-eta * eta);
}

/// Qubit mixing coefficient C = sqrt(1 + sqrt(1 - eta^2)) / sqrt(2).
inline double qubit_coefficient(double eta) {
    return std::sqrt(0.5 * (1.0 + std::sqrt((1.0 - eta) * (1.0 + eta))));
}

/// S(r) = exp[r (a^2 - a^dagger^2) / 2] on the truncated field space.
inline DenseMatrix squeeze_operator(int n_max, double r) {
    const DenseMatrix a = detail::field_annihilation_dense(n_max);
    const DenseMatrix gen = (0.5 * r) * (a * a - a.adjoint() * a.adjoint());
    return gen.exp();
}

/// D(alpha) = exp(alpha a^dagger - conj(alpha) a) on the truncated field space.
inline DenseMatrix displacement_operator(int n_max, cplx alpha) {
    const DenseMatrix a = detail::field_annihilation_dense(n_max);
    const DenseMatrix gen = alpha * a.adjoint() - std::conj(alpha) * a;
    return gen.exp();
}

/// |phi_r> = S(r)|0> on a field-only space.
inline StateVector squeezed_vacuum(const HilbertSpec& spec, double r) {
    spec.validate();
    if (spec.with_qubit) throw DomainError("squeezed_vacuum: requires a field-only space");
    if (r == 0.0) return StateVector::fock(spec, 0);
    Vector v = squeeze_operator(spec.n_max, r).col(0);
    return StateVector(spec, std::move(v));
}

/// Squeezed vacuum at drive amplitude eta, r = r(eta).
inline StateVector squeezed_vacuum_at(const HilbertSpec& spec, double eta) {
    return squeezed_vacuum(spec, squeezing_parameter(eta));
}

// ---------------------------------------------------------------------------
// Truncation policy.

struct TruncationPolicy {
    double tail_tol = kTailTolerance;  // top-decile mass the chosen cutoff must reach
    int min_n_max = 32;
    int max_n_max = 512;
    double margin = 12.0;  // initial guess n_max = margin * exp(-2r)
};

/// Initial cutoff ceil(margin * e^{-2r}) clamped to the policy range.
inline int default_n_max(double r, const TruncationPolicy& policy = {}) {
    const double guess = std::ceil(policy.margin * std::exp(-2.0 * r));
    return static_cast<int>(std::clamp(guess, double(policy.min_n_max), double(policy.max_n_max)));
}

namespace detail {

/// Field component S(r) D(alpha) |level>.
inline Vector squeezed_displaced_fock(int n_max, double r, cplx alpha, int level) {
    Vector v = field_fock(n_max, level);
    if (alpha != cplx(0.0)) v = displacement_operator(n_max, alpha) * v;
    if (r != 0.0) v = squeeze_operator(n_max, r) * v;
    return v;
}

}  // namespace detail

/// Smallest cutoff (grown by x1.5 from the default guess) at which the widest
/// field component of the level-`level` eigenstate at `eta` has top-decile
/// mass <= policy.tail_tol. Returns policy.max_n_max if never reached.
inline int adaptive_n_max(double eta, int level = 0, const TruncationPolicy& policy = {}) {
    const double r = squeezing_parameter(eta);
    const cplx alpha = std::sqrt(static_cast<double>(level)) * std::abs(eta);
    int n = default_n_max(r, policy);
    n = std::max(n, std::min(policy.max_n_max, policy.min_n_max + 4 * level));
    for (;;) {
        const HilbertSpec spec{n, false};
        const Vector v = detail::squeezed_displaced_fock(n, r, alpha, level);
        if (tail_mass(spec, v) <= policy.tail_tol || n >= policy.max_n_max) return n;
        n = std::min(policy.max_n_max, static_cast<int>(std::ceil(1.5 * n)));
    }
}

// ---------------------------------------------------------------------------
// Exact eigenstates of the driven model.

enum class Branch { plus, minus, dark };

/// Dark state (n = 0, Branch::dark) or doublet member |psi_{n,+/-}>:
///   (1/sqrt2) S(r) D(alpha) (|n-1>|Phi_1> +/- |n>|Phi_0>),
/// alpha = -/+ sqrt(n) eta, |Phi_0> = C|g> - s|e>, |Phi_1> = C|e> - s|g>.
/// The dark state is S(r)|0> (x) |Phi_0>.
inline StateVector eigenstate(const HilbertSpec& spec, double eta, int n, Branch branch) {
    spec.validate();
    if (!spec.with_qubit) throw DomainError("eigenstate: requires the composite qubit-field space");
    if (!(eta >= 0.0 && eta < 1.0)) throw DomainError("eigenstate: eta must lie in [0, 1)");
    if (branch == Branch::dark ? n != 0 : n < 1)
        throw DomainError("eigenstate: dark branch needs n = 0, +/- branches need n >= 1");
    if (n > spec.n_max) throw DomainError("eigenstate: level exceeds the cutoff");

    const double r = squeezing_parameter(eta);
    const double c = qubit_coefficient(eta);
    const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
    const int d = spec.field_dim();
    Vector psi(spec.dim());

    if (branch == Branch::dark) {
        const Vector phi = detail::squeezed_displaced_fock(spec.n_max, r, 0.0, 0);
        psi.segment(0, d) = c * phi;
        psi.segment(d, d) = -s * phi;
        return StateVector(spec, std::move(psi));
    }

    const double sign = branch == Branch::plus ? 1.0 : -1.0;
    const cplx alpha = -sign * std::sqrt(static_cast<double>(n)) * eta;
    const Vector v1 = detail::squeezed_displaced_fock(spec.n_max, r, alpha, n - 1);
    const Vector v0 = detail::squeezed_displaced_fock(spec.n_max, r, alpha, n);
    psi.segment(0, d) = (-s * v1 + sign * c * v0) / std::sqrt(2.0);
    psi.segment(d, d) = (c * v1 - sign * s * v0) / std::sqrt(2.0);
    return StateVector(spec, std::move(psi));
}

inline StateVector dark_state(const HilbertSpec& spec, double eta) {
    return eigenstate(spec, eta, 0, Branch::dark);
}

}  // namespace jcsense::fock
