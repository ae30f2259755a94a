#include <cmath>
#include <complex>
#include <vector>

#include <gtest/gtest.h>

#include "jcsense/dop853.hpp"

using namespace jcsense;
using Vec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;

TEST(Dop853, HarmonicOscillatorLongRun) {
    auto rhs = [](double, const Vec& y, Vec& dy) {
        dy[0] = y[1];
        dy[1] = -y[0];
    };
    const double t_end = 200.0 * M_PI;
    std::vector<double> times{t_end};
    Vec y_end;
    ode::Options opt;
    opt.rtol = 1e-11;
    opt.atol = 1e-13;
    const auto stats = ode::integrate<double>(rhs, 0.0, Vec{{1.0, 0.0}}, times,
                                              [&](double, const Vec& y) { y_end = y; }, opt);
    EXPECT_NEAR(y_end[0], 1.0, 1e-8);
    EXPECT_NEAR(y_end[1], 0.0, 1e-8);
    EXPECT_GT(stats.accepted, 100u);
}

TEST(Dop853, ErrorShrinksWithTolerance) {
    auto rhs = [](double t, const Vec& y, Vec& dy) { dy[0] = std::cos(t) * y[0]; };
    auto err = [&](double rtol) {
        ode::Options opt;
        opt.rtol = rtol;
        opt.atol = rtol * 1e-2;
        std::vector<double> times{10.0};
        double out = 0.0;
        ode::integrate<double>(rhs, 0.0, Vec::Ones(1), times, [&](double, const Vec& y) { out = y[0]; }, opt);
        return std::abs(out - std::exp(std::sin(10.0)));
    };
    EXPECT_LT(err(1e-6), 1e-5);
    EXPECT_LT(err(1e-10), 1e-9);
    EXPECT_LT(err(1e-10), err(1e-6));
}

TEST(Dop853, DenseOutputIsSeventhOrderAccurate) {
    auto rhs = [](double, const CVec& y, CVec& dy) { dy = std::complex<double>(0.0, -1.0) * y; };
    std::vector<double> times;
    for (int i = 0; i <= 400; ++i) times.push_back(0.05 * i);
    double worst = 0.0;
    ode::Options opt;
    opt.rtol = 1e-10;
    opt.atol = 1e-12;
    opt.first_step = 1.0;
    ode::integrate<std::complex<double>>(
        rhs, 0.0, CVec::Ones(1), times,
        [&](double t, const CVec& y) { worst = std::max(worst, std::abs(y[0] - std::exp(std::complex<double>(0, -t)))); },
        opt);
    EXPECT_LT(worst, 1e-8);
}

TEST(Dop853, ObserverSeesEverySampleInOrder) {
    auto rhs = [](double, const Vec&, Vec& dy) { dy.setOnes(); };
    std::vector<double> times{0.0, 0.0, 0.3, 1.7, 2.0};
    std::vector<double> seen;
    ode::integrate<double>(rhs, 0.0, Vec::Zero(1), times, [&](double t, const Vec& y) {
        seen.push_back(t);
        EXPECT_NEAR(y[0], t, 1e-12);
    });
    EXPECT_EQ(seen, times);
}

TEST(Dop853, StepSizeUnderflowOnBlowUp) {
    // y' = y^2, y(0) = 1 blows up at t = 1.
    auto rhs = [](double, const Vec& y, Vec& dy) { dy[0] = y[0] * y[0]; };
    std::vector<double> times{2.0};
    EXPECT_THROW(ode::integrate<double>(rhs, 0.0, Vec::Ones(1), times, [](double, const Vec&) {}),
                 ode::StepSizeUnderflow);
}

TEST(Dop853, RejectsBadArguments) {
    auto rhs = [](double, const Vec&, Vec& dy) { dy.setZero(); };
    std::vector<double> backwards{2.0, 1.0};
    EXPECT_THROW(ode::integrate<double>(rhs, 0.0, Vec::Zero(1), backwards, [](double, const Vec&) {}), DomainError);
    std::vector<double> empty;
    EXPECT_THROW(ode::integrate<double>(rhs, 0.0, Vec::Zero(1), empty, [](double, const Vec&) {}), DomainError);
    ode::Options bad;
    bad.rtol = 0.0;
    std::vector<double> one{1.0};
    EXPECT_THROW(ode::integrate<double>(rhs, 0.0, Vec::Zero(1), one, [](double, const Vec&) {}, bad), DomainError);
}
