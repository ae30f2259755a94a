#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "jcsense/analytic.hpp"
#include "jcsense/metrology.hpp"

using namespace jcsense;
using namespace jcsense::metrology;

namespace {

fock::StateVector probe(double eta) {
    const int n = fock::adaptive_n_max(eta, 0, fock::TruncationPolicy{1e-20});
    return fock::squeezed_vacuum_at(fock::HilbertSpec::field(n), eta);
}

constexpr Observable kAll[] = {Observable::photon_number, Observable::x_squared, Observable::p_squared};

}  // namespace

TEST(Moments, MatchClosedForms) {
    for (double eta : {0.1, 0.4, 0.7, 0.9}) {
        const auto s = probe(eta);
        const auto p = analytic::evaluate(eta);
        const auto n = observable_moments(s, Observable::photon_number);
        const auto x = observable_moments(s, Observable::x_squared);
        const auto q = observable_moments(s, Observable::p_squared);
        EXPECT_NEAR(n.mean / p.mean_n, 1.0, 1e-10);
        EXPECT_NEAR(n.variance / p.var_n, 1.0, 1e-10);
        EXPECT_NEAR(x.mean / p.mean_x2, 1.0, 1e-10);
        EXPECT_NEAR(x.variance / p.var_x2, 1.0, 1e-10);
        EXPECT_NEAR(q.mean / p.mean_p2, 1.0, 1e-10);
        EXPECT_NEAR(q.variance / p.var_p2, 1.0, 1e-10);
        for (auto o : kAll) EXPECT_DOUBLE_EQ(analytic_mean(o, eta), observable_moments(s, o).mean);
    }
}

TEST(InvertedVariance, EqualsQfiForEveryScheme) {
    for (double eta : {0.1, 0.3, 0.5, 0.8, 0.9})
        for (auto o : kAll) EXPECT_NEAR(inverted_variance_numeric(eta, o) / analytic::qfi(eta), 1.0, 1e-3) << eta;
}

TEST(InvertedVariance, UndefinedAtVacuumForPhotonCounting) {
    EXPECT_THROW(inverted_variance_numeric(0.0, Observable::photon_number), DomainError);
    EXPECT_THROW(inverted_variance_numeric(0.99995, Observable::x_squared), DomainError);
}

TEST(Hermite, OrthonormalOnAGrid) {
    const int n_max = 40;
    const int points = 4001;
    const double L = 12.0, dq = 2.0 * L / (points - 1);
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n_max + 1, n_max + 1);
    std::vector<double> h;
    for (int j = 0; j < points; ++j) {
        hermite_functions(-L + dq * j, n_max, h);
        const Eigen::Map<const Eigen::VectorXd> v(h.data(), n_max + 1);
        gram += dq * v * v.transpose();
    }
    EXPECT_LT((gram - Eigen::MatrixXd::Identity(n_max + 1, n_max + 1)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Hermite, StableAtLargeOrderAndArgument) {
    std::vector<double> h;
    hermite_functions(30.0, 500, h);
    for (double v : h) EXPECT_TRUE(std::isfinite(v));
    hermite_functions(0.0, 5, h);
    EXPECT_NEAR(h[0], std::pow(M_PI, -0.25), 1e-15);
    EXPECT_EQ(h[1], 0.0);
}

TEST(Sampling, VacuumPhotonCountsAreZero) {
    const auto vac = fock::StateVector::fock(fock::HilbertSpec::field(16), 0);
    for (double v : sample_outcomes(vac, {Observable::photon_number, 1000}, 5).values) EXPECT_EQ(v, 0.0);
}

TEST(Sampling, SqueezedVacuumHasEvenPhotonParity) {
    for (double v : sample_outcomes(probe(0.9), {Observable::photon_number, 5000}, 11).values)
        EXPECT_EQ(std::fmod(v, 2.0), 0.0);
}

TEST(Sampling, SampleMeansWithinThreeSigma) {
    const double eta = 0.8;
    const auto s = probe(eta);
    const std::size_t shots = 200000;
    for (auto o : kAll) {
        const auto out = sample_outcomes(s, {o, shots}, 3);
        ASSERT_FALSE(out.warning) << *out.warning;
        double sum = 0.0;
        for (double v : out.values) sum += v;
        const auto m = observable_moments(s, o);
        EXPECT_NEAR(sum / shots, m.mean, 3.0 * std::sqrt(m.variance / shots)) << to_string(o);
    }
}

TEST(Sampling, QuadratureGridCapturesMass) {
    for (auto o : {Observable::x_squared, Observable::p_squared}) {
        const OutcomeSampler sampler(probe(0.9), o);
        EXPECT_NEAR(sampler.mass(), 1.0, 1e-8);
        EXPECT_FALSE(sampler.warning());
    }
    EXPECT_THROW(OutcomeSampler(probe(0.5), Observable::x_squared, QuadratureGrid{1024, 6.0}), DomainError);
}

TEST(Sampling, DeterministicPerSeedAndStream) {
    const auto s = probe(0.7);
    for (auto o : kAll) {
        const OutcomeSampler sampler(s, o);
        EXPECT_EQ(sampler.draw(500, 42, 3), sampler.draw(500, 42, 3));
        EXPECT_NE(sampler.draw(500, 42, 3), sampler.draw(500, 42, 4));
        EXPECT_NE(sampler.draw(500, 42, 3), sampler.draw(500, 43, 3));
    }
    EXPECT_EQ(splitmix64(0), 0xE220A8397B1DCDAFull);
}

TEST(Estimator, InvertsClosedFormMeansExactly) {
    for (double eta : {0.05, 0.3, 0.6, 0.9, 0.99, 0.999})
        for (auto o : kAll) {
            const auto est = invert_mean(o, analytic_mean(o, eta));
            EXPECT_NEAR(est.eta, eta, 1e-9) << to_string(o) << " eta=" << eta;
            EXPECT_FALSE(est.clipped);
        }
}

TEST(Estimator, ClipsOutsideInvertibleRange) {
    EXPECT_EQ(invert_mean(Observable::photon_number, 0.0).eta, 0.0);
    EXPECT_TRUE(invert_mean(Observable::x_squared, 0.2).clipped);
    EXPECT_TRUE(invert_mean(Observable::p_squared, 0.3).clipped);
    EXPECT_TRUE(invert_mean(Observable::p_squared, 0.0).clipped);
    EXPECT_TRUE(invert_mean(Observable::photon_number, 1e12).clipped);
}

TEST(Estimator, EmptyInputRejected) {
    std::vector<double> none;
    EXPECT_THROW(estimate_eta(none, {Observable::photon_number, 1}), DomainError);
    std::vector<double> some{2.0, 0.0, 4.0};
    EXPECT_NEAR(estimate_eta(some, {Observable::photon_number, 3}).eta,
                invert_mean(Observable::photon_number, 2.0).eta, 1e-15);
}

TEST(CramerRao, RatioAboveLowerBoundAndDeterministic) {
    for (auto o : kAll) {
        const auto a = cramer_rao_study(0.8, {o, 2000}, 200, 9);
        const auto b = cramer_rao_study(0.8, {o, 2000}, 200, 9);
        EXPECT_EQ(a.var_estimate, b.var_estimate);
        EXPECT_GE(a.ratio, 1.0 - 3.0 * a.ratio_stderr) << to_string(o);
        EXPECT_LT(a.ratio, 1.5) << to_string(o);
        EXPECT_NEAR(a.mean_estimate, 0.8, 0.01);
    }
    EXPECT_THROW(cramer_rao_study(0.8, {Observable::photon_number, 10}, 1, 0), DomainError);
}

TEST(Scaling, ExponentsAndHeisenbergRatio) {
    const ramp::RampSchedule s{1.0 / 200.0};
    const auto rep = scaling_experiment(s, log_space(1e2, 1e4, 17));
    ASSERT_EQ(rep.fits.size(), 3u);
    EXPECT_NEAR(rep.fits[0].fitted_exponent, 8.0 / 3.0, 0.05);
    EXPECT_NEAR(rep.fits[1].fitted_exponent, 2.0 / 3.0, 0.05);
    EXPECT_NEAR(rep.fits[2].fitted_exponent, -4.0 / 3.0, 0.02);
    EXPECT_LE(rep.heisenberg_spread, 0.10);
    for (const auto& r : rep.rows) EXPECT_NEAR(r.delta_eta * std::sqrt(r.inverted_variance), 1.0, 1e-12);
}

TEST(Scaling, RejectsBadInput) {
    const ramp::RampSchedule s{1.0 / 200.0};
    EXPECT_THROW(scaling_experiment(s, log_space(1e2, 1e4, 5)), DomainError);
    EXPECT_THROW(scaling_experiment(s, log_space(1.0, 1e4, 9)), DomainError);
    EXPECT_THROW(scaling_experiment(ramp::RampSchedule{0.005, 2.0}, log_space(1e2, 1e4, 9)), DomainError);
}

TEST(LeastSquares, RecoversLine) {
    std::vector<double> x{0, 1, 2, 3}, y{1, 3, 5, 7};
    const auto f = least_squares(x, y);
    EXPECT_NEAR(f.slope, 2.0, 1e-14);
    EXPECT_NEAR(f.intercept, 1.0, 1e-14);
    EXPECT_NEAR(f.r_squared, 1.0, 1e-14);
}
