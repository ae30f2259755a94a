#pragma once

// JSON dumps of states and operators.
//
//   state:    {"kind": "state", "n_max", "with_qubit", "basis_order": "field-fast",
//              "dim", "amplitudes": [[re, im], ...]}
//   operator: {"kind": "operator", "n_max", "with_qubit", "basis_order": "field-fast",
//              "dim", "entries": [[row, col, re, im], ...]}   (row-major, nonzeros only)

#include <string>

#include "json.hpp"  // nlohmann/json, vendored

#include "jcsense/errors.hpp"
#include "jcsense/fockspace.hpp"

namespace jcsense::serialize {

using nlohmann::json;

namespace detail {

inline json header(const fock::HilbertSpec& spec, const char* kind) {
    return json{{"kind", kind},
                {"n_max", spec.n_max},
                {"with_qubit", spec.with_qubit},
                {"basis_order", fock::kBasisOrder},
                {"dim", spec.dim()}};
}

inline fock::HilbertSpec read_header(const json& j, const char* kind) {
    if (j.value("kind", "") != kind) throw ConfigError("kind", std::string("expected '") + kind + "'");
    if (j.value("basis_order", "") != fock::kBasisOrder)
        throw ConfigError("basis_order", "only 'field-fast' is supported");
    fock::HilbertSpec spec{j.at("n_max").get<int>(), j.at("with_qubit").get<bool>()};
    spec.validate();
    if (j.contains("dim") && j.at("dim").get<int>() != spec.dim())
        throw ConfigError("dim", "does not match n_max/with_qubit");
    return spec;
}

}  // namespace detail

inline json to_json(const fock::StateVector& s) {
    json j = detail::header(s.spec(), "state");
    json amps = json::array();
    for (int i = 0; i < s.dim(); ++i) amps.push_back({s.amplitudes()[i].real(), s.amplitudes()[i].imag()});
    j["amplitudes"] = std::move(amps);
    return j;
}

inline fock::StateVector state_from_json(const json& j) {
    const auto spec = detail::read_header(j, "state");
    const auto& amps = j.at("amplitudes");
    if (static_cast<int>(amps.size()) != spec.dim()) throw ConfigError("amplitudes", "wrong length");
    fock::Vector v(spec.dim());
    for (int i = 0; i < spec.dim(); ++i) v[i] = {amps[i].at(0).get<double>(), amps[i].at(1).get<double>()};
    return fock::StateVector(spec, std::move(v), false);
}

inline json to_json(const fock::SparseOperator& op) {
    json j = detail::header(op.spec(), "operator");
    json entries = json::array();
    const auto& m = op.matrix();
    for (int row = 0; row < m.outerSize(); ++row)
        for (fock::SparseMatrix::InnerIterator it(m, row); it; ++it)
            entries.push_back({it.row(), it.col(), it.value().real(), it.value().imag()});
    j["entries"] = std::move(entries);
    return j;
}

inline fock::SparseOperator operator_from_json(const json& j) {
    const auto spec = detail::read_header(j, "operator");
    std::vector<Eigen::Triplet<fock::cplx>> t;
    for (const auto& e : j.at("entries")) {
        const int row = e.at(0).get<int>(), col = e.at(1).get<int>();
        if (row < 0 || col < 0 || row >= spec.dim() || col >= spec.dim())
            throw ConfigError("entries", "index out of range");
        t.emplace_back(row, col, fock::cplx(e.at(2).get<double>(), e.at(3).get<double>()));
    }
    fock::SparseMatrix m(spec.dim(), spec.dim());
    m.setFromTriplets(t.begin(), t.end());
    return {spec, std::move(m)};
}

}  // namespace jcsense::serialize
