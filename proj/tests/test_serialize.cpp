#include <random>

#include <gtest/gtest.h>

#include "jcsense/fockspace.hpp"
#include "jcsense/serialize.hpp"

using namespace jcsense;
using namespace jcsense::serialize;

TEST(Serialize, StateRoundTripProperty) {
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> gauss;
    for (int trial = 0; trial < 25; ++trial) {
        const auto spec = fock::HilbertSpec{1 + static_cast<int>(rng() % 40), trial % 2 == 0};
        fock::Vector v(spec.dim());
        for (auto& c : v) c = {gauss(rng), gauss(rng)};
        const fock::StateVector s(spec, v);
        const auto back = state_from_json(json::parse(to_json(s).dump()));
        ASSERT_EQ(back.spec(), s.spec());
        EXPECT_EQ(back.amplitudes(), s.amplitudes());
    }
}

TEST(Serialize, OperatorRoundTripProperty) {
    for (int n_max : {1, 7, 33}) {
        const auto spec = fock::HilbertSpec::composite(n_max);
        const auto h = fock::build_hamiltonian(spec, 1.7, 0.37) + fock::cplx(0.0, 0.25) * fock::quadrature_p(spec);
        const auto back = operator_from_json(json::parse(to_json(h).dump()));
        ASSERT_EQ(back.spec(), spec);
        EXPECT_EQ(back.to_dense(), h.to_dense());
    }
}

TEST(Serialize, HeaderDescribesBasis) {
    const auto j = to_json(fock::StateVector::fock(fock::HilbertSpec::composite(3), 1, fock::Qubit::e));
    EXPECT_EQ(j.at("basis_order"), "field-fast");
    EXPECT_EQ(j.at("dim"), 8);
    EXPECT_EQ(j.at("amplitudes")[5][0], 1.0);
}

TEST(Serialize, RejectsMalformedInput) {
    auto j = to_json(fock::StateVector::fock(fock::HilbertSpec::field(4), 0));
    auto bad = j;
    bad["basis_order"] = "qubit-fast";
    EXPECT_THROW(state_from_json(bad), ConfigError);
    bad = j;
    bad["amplitudes"].erase(0);
    EXPECT_THROW(state_from_json(bad), ConfigError);
    bad = j;
    bad["kind"] = "operator";
    EXPECT_THROW(state_from_json(bad), ConfigError);
    auto op = to_json(fock::number_op(fock::HilbertSpec::field(4)));
    op["entries"].push_back({9, 0, 1.0, 0.0});
    EXPECT_THROW(operator_from_json(op), ConfigError);
}
