#include <cmath>

#include <gtest/gtest.h>

#include "jcsense/ramp.hpp"

using namespace jcsense;
using namespace jcsense::ramp;

TEST(Ramp, EpsilonIdentity) {
    const RampSchedule s{1.0 / 200.0};
    for (double t : {0.0, 1.0, 50.0, 200.0, 1e3, 6e3, 1e5}) {
        const double eta = eta_at(s, t);
        EXPECT_NEAR(epsilon_at(s, t), 1.0 - eta * eta, 1e-14) << t;
    }
}

TEST(Ramp, KtOneGivesInverseRootTwo) {
    const RampSchedule s{1.0 / 200.0};
    EXPECT_NEAR(eta_at(s, 200.0), 1.0 / std::sqrt(2.0), 1e-15);
}

TEST(Ramp, PowerLawTail) {
    const RampSchedule s{1.0 / 200.0};
    for (double kt : {10.0, 30.0, 100.0, 1e3, 1e4}) {
        const double eps = epsilon_at(s, kt / s.k);
        EXPECT_NEAR(eps / std::pow(kt, -4.0 / 3.0), 1.0, 0.05) << kt;
    }
}

TEST(Ramp, InverseRoundTrip) {
    for (double k : {1.0 / 400.0, 1.0 / 200.0, 0.05})
        for (double eta : {0.1, 0.5, 0.9, 0.99, 0.995, 0.999}) {
            const RampSchedule s{k, kDefaultExponent, eta};
            EXPECT_NEAR(eta_at(s, duration(s)), eta, 1e-12);
        }
    const RampSchedule fig{1.0 / 200.0, kDefaultExponent, 0.995};
    EXPECT_NEAR(fig.k * duration(fig), 31.44, 0.01);
}

TEST(Ramp, DerivativeMatchesFiniteDifference) {
    for (double xi : {4.0 / 3.0, 2.0, 3.0}) {
        const RampSchedule s{1.0 / 200.0, xi};
        for (double t : {5.0, 200.0, 3000.0}) {
            const double h = 1e-5 * t;
            const double fd = (eta_at(s, t + h) - eta_at(s, t - h)) / (2.0 * h);
            EXPECT_NEAR(eta_dot_at(s, t) / fd, 1.0, 1e-6) << "xi=" << xi << " t=" << t;
        }
    }
}

TEST(Ramp, DerivativeAtOrigin) {
    EXPECT_TRUE(std::isinf(eta_dot_at(RampSchedule{0.01, 4.0 / 3.0}, 0.0)));
    EXPECT_EQ(eta_dot_at(RampSchedule{0.01, 2.0}, 0.0), 0.01);
    EXPECT_EQ(eta_dot_at(RampSchedule{0.01, 4.0}, 0.0), 0.0);
    EXPECT_EQ(eta_dot_at(RampSchedule{0.0}, 10.0), 0.0);
    EXPECT_EQ(eta_at(RampSchedule{0.0}, 10.0), 0.0);
}

TEST(Ramp, AsymptoticDerivativeNearCritical) {
    // For xi = 4/3 the two forms differ by exactly eta^{3/2}.
    const RampSchedule s{1.0 / 200.0};
    for (double kt : {20.0, 30.0, 100.0, 1e3}) {
        const double t = kt / s.k;
        const double eta = eta_at(s, t);
        const double ratio = eta_dot_asymptotic(s, eta) / eta_dot_at(s, t);
        EXPECT_NEAR(ratio, std::pow(eta, 1.5), 1e-10) << kt;
        if (kt >= 30.0) {
            EXPECT_NEAR(ratio, 1.0, 0.01) << kt;
        }
    }
}

TEST(Transition, BelowBoundAlongRamp) {
    for (double k : {1.0 / 400.0, 1.0 / 200.0, 1.0 / 100.0}) {
        const RampSchedule s{k};
        for (double eta : {0.8, 0.9, 0.99, 0.999})
            for (int n = 1; n <= 20; ++n) EXPECT_LT(transition_probability(s, 1.0, eta, n), transition_bound(k, 1.0));
    }
}

TEST(Transition, ScalesAsKSquared) {
    const double p1 = transition_probability(RampSchedule{1.0 / 400.0}, 1.0, 0.99, 1);
    const double p2 = transition_probability(RampSchedule{1.0 / 200.0}, 1.0, 0.99, 1);
    EXPECT_NEAR(p2 / p1, 4.0, 1e-9);
}

TEST(Transition, CriticalExponentVanishesForDefaultXi) {
    // For xi = 4/3 the (1 - eta^2) dependence cancels exactly:
    // P_1 = (k e^{-eta^2/2} / (3 sqrt2 Omega))^2 / eta.
    const RampSchedule s{1.0 / 200.0};
    for (double eta : {0.5, 0.9, 0.95, 0.99, 0.995, 0.999}) {
        const double x = s.k * std::exp(-0.5 * eta * eta) / (3.0 * std::sqrt(2.0));
        EXPECT_NEAR(transition_probability(s, 1.0, eta, 1) / (x * x / eta), 1.0, 1e-10) << eta;
    }
}

TEST(Transition, CriticalLimitOfFirstLevel) {
    const RampSchedule s{1.0 / 200.0};
    const double x = s.k * std::exp(-0.5) / (3.0 * std::sqrt(2.0));
    EXPECT_NEAR(transition_probability(s, 1.0, 0.999999, 1) / (x * x), 1.0, 1e-5);
}

TEST(Transition, LevelPrefactorDecays) {
    for (int n = 2; n <= 30; ++n) EXPECT_LT(level_prefactor(n), level_prefactor(n - 1)) << n;
    // Stirling: n^{7/4} * prefactor -> (2 pi)^{-1/4}, so the decay is faster than 1/n.
    EXPECT_NEAR(std::pow(400.0, 1.75) * level_prefactor(400) * std::pow(2.0 * M_PI, 0.25), 1.0, 1e-3);
}

TEST(Transition, LargeLevelsStayFinite) {
    const RampSchedule s{1.0 / 200.0};
    const double p = transition_probability(s, 1.0, 0.999, 200);
    EXPECT_TRUE(std::isfinite(p));
    EXPECT_GE(p, 0.0);
    EXPECT_GT(level_prefactor(1), level_prefactor(20));
    EXPECT_EQ(transition_probability(RampSchedule{0.0}, 1.0, 0.9, 1), 0.0);
    EXPECT_THROW(transition_probability(s, 1.0, 1.0, 1), DomainError);
}

TEST(Ramp, Validation) {
    EXPECT_THROW((RampSchedule{-1.0}.validate()), DomainError);
    EXPECT_THROW((RampSchedule{0.1, 0.0}.validate()), DomainError);
    EXPECT_THROW((RampSchedule{0.1, 1.0, 1.0}.validate()), DomainError);
    EXPECT_THROW(time_at_eta(RampSchedule{0.0}, 0.5), DomainError);
}
