#pragma once

// Schrodinger integration of the driven Jaynes-Cummings model along a ramp,
// tracking the fidelity with the instantaneous dark state.

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "jcsense/dop853.hpp"
#include "jcsense/errors.hpp"
#include "jcsense/fockspace.hpp"
#include "jcsense/ramp.hpp"

namespace jcsense::dynamics {

using fock::cplx;
using fock::Vector;

/// Field population in the top decile above which a run carries a warning.
inline constexpr double kTrajectoryTailTolerance = 1e-8;

struct EvolutionConfig {
    double omega = 1.0;
    ramp::RampSchedule schedule{};
    fock::HilbertSpec spec{128, true};
    double rtol = 1e-9;
    double atol = 1e-11;
    /// Sampling stride in kt units; 0 selects kt_end / samples.
    double record_every = 0.0;
    int samples = 200;
    /// Run length. Required when k = 0, otherwise the
    /// run ends where eta reaches eta_target.
    std::optional<double> duration;

    void validate() const {
        if (!(omega > 0.0)) throw DomainError("EvolutionConfig: Omega must be > 0");
        schedule.validate();
        spec.validate();
        if (!spec.with_qubit) throw DomainError("EvolutionConfig: spec must include the qubit");
        if (!(rtol > 0.0) || !(atol > 0.0)) throw DomainError("EvolutionConfig: tolerances must be > 0");
        if (record_every < 0.0) throw DomainError("EvolutionConfig: record_every must be >= 0");
        if (samples < 1) throw DomainError("EvolutionConfig: samples must be >= 1");
        if (schedule.k == 0.0 && !duration) throw DomainError("EvolutionConfig: k = 0 needs an explicit duration");
        if (duration && !(*duration > 0.0)) throw DomainError("EvolutionConfig: duration must be > 0");
    }

    double end_time() const {
        return duration ? *duration : ramp::duration(schedule);
    }
};

struct TrajectoryRecord {
    double t = 0.0;
    double eta = 0.0;
    double fidelity = 1.0;
    double mean_n = 0.0;
    double var_n = 0.0;
    double mean_x2 = 0.25;
    double mean_p2 = 0.25;
    double norm_defect = 0.0;
};

struct Trajectory {
    std::vector<TrajectoryRecord> records;
    ode::Stats stats;
    double max_tail_mass = 0.0;
    std::optional<std::string> truncation_warning;

    double min_fidelity() const {
        double m = 1.0;
        for (const auto& r : records) m = std::min(m, r.fidelity);
        return m;
    }
    const TrajectoryRecord& final() const { return records.back(); }
};

/// |<psi_0(eta)|Psi>|^2. The dark state is built at the state's cutoff; if that
/// cutoff is too small for the dark state, both are moved to a larger one.
inline double fidelity_against_dark(const fock::StateVector& state, double eta) {
    if (!state.spec().with_qubit) throw DomainError("fidelity_against_dark: needs a composite state");
    auto dark = fock::dark_state(state.spec(), eta);
    if (dark.truncation_warning()) {
        const int bigger = std::max(state.spec().n_max, fock::adaptive_n_max(eta));
        const auto padded = state.embedded(bigger);
        dark = fock::dark_state(padded.spec(), eta);
        return std::norm(dark.inner(padded)) / padded.amplitudes().squaredNorm();
    }
    return std::norm(dark.inner(state)) / state.amplitudes().squaredNorm();
}

/// Field moments of a composite state, traced over the qubit.
struct FieldMoments {
    fock::SparseOperator n_op;
    fock::SparseOperator x_op;
    fock::SparseOperator p_op;

    explicit FieldMoments(const fock::HilbertSpec& spec)
        : n_op(fock::number_op(spec)), x_op(fock::quadrature_x(spec)), p_op(fock::quadrature_p(spec)) {}

    void fill(const Vector& psi, TrajectoryRecord& rec) const {
        const double norm2 = psi.squaredNorm();
        const Vector npsi = n_op.apply(psi);
        rec.mean_n = std::real(psi.dot(npsi)) / norm2;
        rec.var_n = npsi.squaredNorm() / norm2 - rec.mean_n * rec.mean_n;
        rec.mean_x2 = x_op.apply(psi).squaredNorm() / norm2;
        rec.mean_p2 = p_op.apply(psi).squaredNorm() / norm2;
    }
};

/// Integrates i d|Psi>/dt = H(t)|Psi> from |0>|g> with
/// H(t) = Omega [H_JC + eta(t) H_drive], recording at a uniform kt stride.
inline Trajectory evolve(const EvolutionConfig& cfg) {
    cfg.validate();
    const auto parts = fock::build_hamiltonian_parts(cfg.spec, cfg.omega);
    const fock::SparseMatrix& coupling = parts.coupling.matrix();
    const fock::SparseMatrix& drive = parts.drive.matrix();
    const double omega = cfg.omega;
    const auto schedule = cfg.schedule;

    auto rhs = [&, scratch = Vector(cfg.spec.dim())](double t, const Vector& y, Vector& dydt) mutable {
        const double eta = ramp::eta_at(schedule, t);
        dydt.noalias() = coupling * y;
        scratch.noalias() = drive * y;
        dydt += eta * scratch;
        dydt *= cplx(0.0, -omega);
    };

    const double t_end = cfg.end_time();
    std::vector<double> times;
    if (schedule.k > 0.0 && cfg.record_every > 0.0) {
        const double dt = cfg.record_every / schedule.k;
        for (double t = 0.0; t < t_end * (1.0 - 1e-12); t += dt) times.push_back(t);
    } else {
        for (int i = 0; i < cfg.samples; ++i) times.push_back(t_end * i / cfg.samples);
    }
    times.push_back(t_end);

    const FieldMoments moments(cfg.spec);
    Trajectory out;
    out.records.reserve(times.size());
    auto observe = [&](double t, const Vector& psi) {
        TrajectoryRecord rec;
        rec.t = t;
        // The final record lands exactly on the target.
        rec.eta = (t == t_end && !cfg.duration) ? schedule.eta_target : ramp::eta_at(schedule, t);
        const fock::StateVector state(cfg.spec, psi, false);
        rec.fidelity = std::clamp(fidelity_against_dark(state, rec.eta), 0.0, 1.0);
        moments.fill(psi, rec);
        rec.norm_defect = std::abs(1.0 - psi.squaredNorm());
        out.max_tail_mass = std::max(out.max_tail_mass, state.tail_mass());
        out.records.push_back(rec);
    };

    ode::Options opt;
    opt.rtol = cfg.rtol;
    opt.atol = cfg.atol;
    const Vector psi0 = fock::StateVector::fock(cfg.spec, 0, fock::Qubit::g).amplitudes();
    out.stats = ode::integrate<cplx>(rhs, 0.0, psi0, times, observe, opt);

    if (out.max_tail_mass > kTrajectoryTailTolerance) {
        out.truncation_warning = "truncation: field population in the top decile reached " +
                                 std::to_string(out.max_tail_mass) + " at n_max=" +
                                 std::to_string(cfg.spec.n_max);
    }
    return out;
}

}  // namespace jcsense::dynamics
