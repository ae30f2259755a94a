#pragma once

// Named experiments driven by a JSON config, emitting self-describing CSV or
// JSON tables. See docs/config.md for the schema and the frozen column sets.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"  // nlohmann/json, vendored

#include "jcsense/analytic.hpp"
#include "jcsense/dynamics.hpp"
#include "jcsense/errors.hpp"
#include "jcsense/fockspace.hpp"
#include "jcsense/metrology.hpp"
#include "jcsense/ramp.hpp"

namespace jcsense::experiment {

using ojson = nlohmann::ordered_json;

inline constexpr const char* kVersion = "0.1.0";

enum class Kind { qfi_curve, ramp_curve, fidelity_sweep, scaling, cramer_rao, moments_check };
enum class Format { csv, json };

inline std::string_view to_string(Kind k) {
    switch (k) {
        case Kind::qfi_curve: return "qfi_curve";
        case Kind::ramp_curve: return "ramp_curve";
        case Kind::fidelity_sweep: return "fidelity_sweep";
        case Kind::scaling: return "scaling";
        case Kind::cramer_rao: return "cramer_rao";
        case Kind::moments_check: return "moments_check";
    }
    return "?";
}

struct Physics {
    double omega = 1.0;
    double k = 1.0 / 200.0;  // same units as Omega
    double xi = ramp::kDefaultExponent;
    double eta_target = 0.995;
};

struct Numerics {
    std::optional<int> n_max;  // empty: adaptive
    double tail_tol = fock::kTailTolerance;
    double rtol = 1e-9;
    double atol = 1e-11;
    double d_eta = 1e-4;
    std::uint64_t seed = 1;
    std::size_t shots = 10000;
    std::size_t replicas = 500;
    int samples = 200;
};

/// Experiment-specific grids. Unset fields take per-experiment defaults.
struct Sweep {
    std::optional<double> eta_min, eta_max;
    std::optional<int> points;
    std::optional<double> kt_step;
    std::optional<double> kt_min, kt_max;
    std::optional<double> eta;
    std::optional<metrology::Observable> observable;
    std::optional<std::vector<std::size_t>> shots_list;
};

struct Output {
    std::string path;  // empty or "-": stdout
    Format format = Format::csv;
    int precision = 12;
};

struct ExperimentConfig {
    Kind experiment = Kind::qfi_curve;
    Physics physics;
    Numerics numerics;
    Sweep sweep;
    Output output;
};

// ---------------------------------------------------------------------------
// Parsing.

namespace detail {

inline void reject_unknown(const ojson& obj, const std::string& where, std::initializer_list<std::string_view> keys) {
    if (!obj.is_object()) throw ConfigError(where, "expected an object");
    for (const auto& [key, _] : obj.items()) {
        if (std::find(keys.begin(), keys.end(), key) == keys.end())
            throw ConfigError(where.empty() ? key : where + "." + key, "unknown key");
    }
}

template <class T>
T get(const ojson& obj, const std::string& where, const char* key) {
    const std::string path = where.empty() ? std::string(key) : where + "." + key;
    try {
        return obj.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path, std::string("invalid value (") + e.what() + ")");
    }
}

template <class T>
void read(const ojson& obj, const std::string& where, const char* key, T& out) {
    if (obj.contains(key)) out = get<T>(obj, where, key);
}

template <class T>
void read(const ojson& obj, const std::string& where, const char* key, std::optional<T>& out) {
    if (obj.contains(key)) out = get<T>(obj, where, key);
}

inline Kind parse_kind(const std::string& s) {
    for (Kind k : {Kind::qfi_curve, Kind::ramp_curve, Kind::fidelity_sweep, Kind::scaling, Kind::cramer_rao,
                   Kind::moments_check})
        if (to_string(k) == s) return k;
    throw ConfigError("experiment", "unknown experiment '" + s + "'");
}

}  // namespace detail

/// Strict parse: unknown keys and missing required fields are errors.
inline ExperimentConfig parse_config(const ojson& j) {
    using namespace detail;
    ExperimentConfig c;
    reject_unknown(j, "", {"experiment", "physics", "numerics", "sweep", "output"});
    if (!j.contains("experiment")) throw ConfigError("experiment", "missing");
    c.experiment = parse_kind(get<std::string>(j, "", "experiment").c_str());

    if (!j.contains("physics")) throw ConfigError("physics", "missing");
    const auto& ph = j.at("physics");
    reject_unknown(ph, "physics", {"Omega", "k", "xi", "eta_target"});
    for (const char* key : {"Omega", "k", "eta_target"})
        if (!ph.contains(key)) throw ConfigError(std::string("physics.") + key, "missing");
    c.physics.omega = get<double>(ph, "physics", "Omega");
    c.physics.k = get<double>(ph, "physics", "k");
    read(ph, "physics", "xi", c.physics.xi);
    c.physics.eta_target = get<double>(ph, "physics", "eta_target");

    if (j.contains("numerics")) {
        const auto& nu = j.at("numerics");
        reject_unknown(nu, "numerics",
                       {"n_max", "tail_tol", "rtol", "atol", "d_eta", "seed", "shots", "replicas", "samples"});
        if (nu.contains("n_max")) {
            const auto& v = nu.at("n_max");
            if (v.is_string()) {
                if (v.get<std::string>() != "adaptive") throw ConfigError("numerics.n_max", "expected an integer or \"adaptive\"");
            } else {
                c.numerics.n_max = get<int>(nu, "numerics", "n_max");
            }
        }
        read(nu, "numerics", "tail_tol", c.numerics.tail_tol);
        read(nu, "numerics", "rtol", c.numerics.rtol);
        read(nu, "numerics", "atol", c.numerics.atol);
        read(nu, "numerics", "d_eta", c.numerics.d_eta);
        read(nu, "numerics", "seed", c.numerics.seed);
        read(nu, "numerics", "shots", c.numerics.shots);
        read(nu, "numerics", "replicas", c.numerics.replicas);
        read(nu, "numerics", "samples", c.numerics.samples);
    }

    if (j.contains("sweep")) {
        const auto& sw = j.at("sweep");
        reject_unknown(sw, "sweep",
                       {"eta_min", "eta_max", "points", "kt_step", "kt_min", "kt_max", "eta", "observable", "shots_list"});
        read(sw, "sweep", "eta_min", c.sweep.eta_min);
        read(sw, "sweep", "eta_max", c.sweep.eta_max);
        read(sw, "sweep", "points", c.sweep.points);
        read(sw, "sweep", "kt_step", c.sweep.kt_step);
        read(sw, "sweep", "kt_min", c.sweep.kt_min);
        read(sw, "sweep", "kt_max", c.sweep.kt_max);
        read(sw, "sweep", "eta", c.sweep.eta);
        if (sw.contains("observable")) {
            try {
                c.sweep.observable = metrology::parse_observable(get<std::string>(sw, "sweep", "observable"));
            } catch (const DomainError& e) {
                throw ConfigError("sweep.observable", e.what());
            }
        }
        read(sw, "sweep", "shots_list", c.sweep.shots_list);
    }

    if (j.contains("output")) {
        const auto& out = j.at("output");
        reject_unknown(out, "output", {"path", "format", "precision"});
        read(out, "output", "path", c.output.path);
        if (out.contains("format")) {
            const auto f = get<std::string>(out, "output", "format");
            if (f == "csv") c.output.format = Format::csv;
            else if (f == "json") c.output.format = Format::json;
            else throw ConfigError("output.format", "expected \"csv\" or \"json\"");
        }
        read(out, "output", "precision", c.output.precision);
    }
    return c;
}

/// Fills per-experiment sweep defaults.
inline ExperimentConfig resolve(ExperimentConfig c) {
    auto& s = c.sweep;
    switch (c.experiment) {
        case Kind::qfi_curve:
            if (!s.eta_min) s.eta_min = 0.0;
            if (!s.eta_max) s.eta_max = c.physics.eta_target;
            if (!s.points) s.points = 200;
            break;
        case Kind::ramp_curve:
            if (!s.kt_step) s.kt_step = 0.1;
            break;
        case Kind::scaling:
            if (!s.kt_min) s.kt_min = 100.0;
            if (!s.kt_max) s.kt_max = 1e4;
            if (!s.points) s.points = 9;
            break;
        case Kind::cramer_rao:
            if (!s.eta) s.eta = 0.8;
            if (!s.observable) s.observable = metrology::Observable::photon_number;
            if (!s.shots_list) s.shots_list = std::vector<std::size_t>{c.numerics.shots};
            break;
        case Kind::moments_check:
            if (!s.eta_min) s.eta_min = 0.1;
            if (!s.eta_max) s.eta_max = 0.9;
            if (!s.points) s.points = 9;
            break;
        case Kind::fidelity_sweep:
            break;
    }
    return c;
}

/// Physics-range and numerics checks.
inline void validate(const ExperimentConfig& c) {
    const auto& p = c.physics;
    if (!(p.omega > 0.0) || !std::isfinite(p.omega)) throw ConfigError("physics.Omega", "must be > 0");
    if (!(p.k > 0.0) || !std::isfinite(p.k)) throw ConfigError("physics.k", "must be > 0");
    if (!(p.xi > 0.0) || !std::isfinite(p.xi)) throw ConfigError("physics.xi", "must be > 0");
    if (!(p.eta_target > 0.0 && p.eta_target < 1.0)) throw ConfigError("physics.eta_target", "must lie in (0, 1)");

    const auto& n = c.numerics;
    if (n.n_max && (*n.n_max < 1 || *n.n_max > 4096)) throw ConfigError("numerics.n_max", "must lie in [1, 4096]");
    if (!(n.tail_tol > 0.0)) throw ConfigError("numerics.tail_tol", "must be > 0");
    if (!(n.rtol > 0.0)) throw ConfigError("numerics.rtol", "must be > 0");
    if (!(n.atol > 0.0)) throw ConfigError("numerics.atol", "must be > 0");
    if (!(n.d_eta > 0.0 && n.d_eta < 0.01)) throw ConfigError("numerics.d_eta", "must lie in (0, 0.01)");
    if (n.shots < 1) throw ConfigError("numerics.shots", "must be >= 1");
    if (n.replicas < 2) throw ConfigError("numerics.replicas", "must be >= 2");
    if (n.samples < 1) throw ConfigError("numerics.samples", "must be >= 1");

    const auto& o = c.output;
    if (o.precision < 1 || o.precision > 17) throw ConfigError("output.precision", "must lie in [1, 17]");

    const auto& s = c.sweep;
    if (s.points && *s.points < 2) throw ConfigError("sweep.points", "must be >= 2");
    if (s.eta_min && !(*s.eta_min >= 0.0 && *s.eta_min < 1.0)) throw ConfigError("sweep.eta_min", "must lie in [0, 1)");
    if (s.eta_max && !(*s.eta_max > 0.0 && *s.eta_max < 1.0)) throw ConfigError("sweep.eta_max", "must lie in (0, 1)");
    if (s.eta_min && s.eta_max && !(*s.eta_min < *s.eta_max)) throw ConfigError("sweep.eta_max", "must exceed eta_min");
    if (s.kt_step && !(*s.kt_step > 0.0)) throw ConfigError("sweep.kt_step", "must be > 0");
    if (s.eta && !(*s.eta > 0.0 && *s.eta < 1.0)) throw ConfigError("sweep.eta", "must lie in (0, 1)");
    if (s.shots_list) {
        if (s.shots_list->empty()) throw ConfigError("sweep.shots_list", "must not be empty");
        for (auto v : *s.shots_list)
            if (v < 1) throw ConfigError("sweep.shots_list", "entries must be >= 1");
    }
    if (c.experiment == Kind::scaling) {
        if (std::abs(p.xi - ramp::kDefaultExponent) > 1e-12) throw ConfigError("physics.xi", "scaling requires xi = 4/3");
        if (s.kt_min && !(*s.kt_min >= 10.0)) throw ConfigError("sweep.kt_min", "must be >= 10");
        if (s.kt_min && s.kt_max && !(*s.kt_max > *s.kt_min)) throw ConfigError("sweep.kt_max", "must exceed kt_min");
        if (s.points && *s.points < 8) throw ConfigError("sweep.points", "scaling needs >= 8 points");
    }
    if (c.experiment == Kind::moments_check && s.eta_min && !(*s.eta_min > 0.0))
        throw ConfigError("sweep.eta_min", "moments_check needs eta_min > 0 (Var[O] vanishes at eta = 0)");
    if (c.experiment == Kind::moments_check && s.eta_max && *s.eta_max > 0.999)
        throw ConfigError("sweep.eta_max", "Fock-space checks are limited to eta <= 0.999");
}

/// Resolved config as JSON (the header block of every emitted file).
inline ojson to_json(const ExperimentConfig& c) {
    ojson j;
    j["experiment"] = std::string(to_string(c.experiment));
    j["physics"] = {{"Omega", c.physics.omega}, {"k", c.physics.k}, {"xi", c.physics.xi},
                    {"eta_target", c.physics.eta_target}};
    ojson nu;
    if (c.numerics.n_max) nu["n_max"] = *c.numerics.n_max;
    else nu["n_max"] = "adaptive";
    nu["tail_tol"] = c.numerics.tail_tol;
    nu["rtol"] = c.numerics.rtol;
    nu["atol"] = c.numerics.atol;
    nu["d_eta"] = c.numerics.d_eta;
    nu["seed"] = c.numerics.seed;
    nu["shots"] = c.numerics.shots;
    nu["replicas"] = c.numerics.replicas;
    nu["samples"] = c.numerics.samples;
    j["numerics"] = std::move(nu);
    ojson sw = ojson::object();
    const auto& s = c.sweep;
    if (s.eta_min) sw["eta_min"] = *s.eta_min;
    if (s.eta_max) sw["eta_max"] = *s.eta_max;
    if (s.points) sw["points"] = *s.points;
    if (s.kt_step) sw["kt_step"] = *s.kt_step;
    if (s.kt_min) sw["kt_min"] = *s.kt_min;
    if (s.kt_max) sw["kt_max"] = *s.kt_max;
    if (s.eta) sw["eta"] = *s.eta;
    if (s.observable) sw["observable"] = std::string(metrology::to_string(*s.observable));
    if (s.shots_list) sw["shots_list"] = *s.shots_list;
    j["sweep"] = std::move(sw);
    // output.path is left out so that a file re-run from its own header is byte-identical.
    j["output"] = {{"format", c.output.format == Format::csv ? "csv" : "json"},
                   {"precision", c.output.precision}};
    return j;
}

/// Reads a config file, or the config embedded in a previously emitted CSV
/// (`# config: {...}` line) or JSON (`meta.config`) output.
inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("", "cannot open config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();

    ojson j;
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '#') {
        std::istringstream lines(text);
        std::string line;
        bool found = false;
        while (std::getline(lines, line) && !line.empty() && line[0] == '#') {
            constexpr std::string_view tag = "# config: ";
            if (line.rfind(tag, 0) == 0) {
                j = ojson::parse(line.substr(tag.size()), nullptr, false);
                found = true;
                break;
            }
        }
        if (!found) throw ConfigError("", "no '# config:' line in '" + path + "'");
    } else {
        j = ojson::parse(text, nullptr, false);
    }
    if (j.is_discarded()) throw ConfigError("", "'" + path + "' is not valid JSON");
    if (j.contains("meta") && j.at("meta").contains("config")) j = j.at("meta").at("config");
    return resolve(parse_config(j));
}

// ---------------------------------------------------------------------------
// Tables.

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    ojson summary = ojson::object();
    std::vector<std::string> warnings;
};

struct RunResult {
    Table table;
    std::string text;  // emitted document
};

namespace detail {

inline std::string format_number(double v, int precision) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::ostringstream os;
    os << std::setprecision(precision) << v;
    return os.str();
}

/// Rounds to `precision` significant digits so JSON mirrors CSV.
inline ojson rounded(double v, int precision) {
    if (!std::isfinite(v)) return format_number(v, precision);
    return std::stod(format_number(v, precision));
}

inline int field_cutoff(const ExperimentConfig& c, double eta, int level = 0) {
    if (c.numerics.n_max) return *c.numerics.n_max;
    fock::TruncationPolicy policy;
    policy.tail_tol = c.numerics.tail_tol;
    return fock::adaptive_n_max(eta, level, policy);
}

inline std::vector<double> linear_grid(double lo, double hi, int points) {
    std::vector<double> v(points);
    for (int i = 0; i < points; ++i) v[i] = lo + (hi - lo) * i / (points - 1);
    v.back() = hi;
    return v;
}

// Every experiment runs with Omega = 1 internally (rates in units of Omega);
// Omega from the config only rescales the time columns.

inline Table run_qfi_curve(const ExperimentConfig& c) {
    Table t;
    t.columns = {"eta", "qfi", "inv_var_n", "inv_var_x2", "inv_var_p2", "mean_n", "var_n", "chi",
                 "mean_x2", "var_x2", "mean_p2", "var_p2", "r"};
    for (double eta : linear_grid(*c.sweep.eta_min, *c.sweep.eta_max, *c.sweep.points)) {
        const auto p = analytic::evaluate(eta);
        t.rows.push_back({eta, p.qfi, p.inv_var_n, p.inv_var_x2, p.inv_var_p2, p.mean_n, p.var_n, p.chi,
                          p.mean_x2, p.var_x2, p.mean_p2, p.var_p2, p.r});
    }
    bool monotone = true;
    for (std::size_t i = 1; i < t.rows.size(); ++i) monotone = monotone && t.rows[i][1] > t.rows[i - 1][1];
    t.summary["qfi_monotone"] = monotone;
    t.summary["qfi_at_eta_max"] = t.rows.back()[1];
    return t;
}

inline Table run_ramp_curve(const ExperimentConfig& c) {
    const double k = c.physics.k / c.physics.omega;
    const ramp::RampSchedule s{k, c.physics.xi, c.physics.eta_target};
    const double kt_end = k * ramp::duration(s);
    Table t;
    t.columns = {"kt", "t", "eta", "eta_dot", "epsilon", "gap", "p_transition_1"};
    const double step = *c.sweep.kt_step;
    auto add = [&](double kt) {
        const double time = kt / k;
        const double eta = ramp::eta_at(s, time);
        const double p1 = eta > 0.0 ? ramp::transition_probability(s, 1.0, eta, 1) : 0.0;
        t.rows.push_back({kt, time / c.physics.omega, eta, ramp::eta_dot_at(s, time) * c.physics.omega,
                          ramp::epsilon_at(s, time), analytic::gap(1.0, eta) * c.physics.omega, p1});
    };
    for (long i = 0; static_cast<double>(i) * step < kt_end * (1.0 - 1e-12); ++i) add(static_cast<double>(i) * step);
    add(kt_end);
    t.rows.back()[2] = c.physics.eta_target;
    t.summary["kt_end"] = kt_end;
    t.summary["t_end"] = kt_end / k / c.physics.omega;
    return t;
}

inline Table run_fidelity_sweep(const ExperimentConfig& c) {
    dynamics::EvolutionConfig ev;
    ev.omega = 1.0;
    ev.schedule = {c.physics.k / c.physics.omega, c.physics.xi, c.physics.eta_target};
    ev.spec = fock::HilbertSpec::composite(field_cutoff(c, c.physics.eta_target));
    ev.rtol = c.numerics.rtol;
    ev.atol = c.numerics.atol;
    ev.samples = c.numerics.samples;
    const auto traj = dynamics::evolve(ev);

    Table t;
    t.columns = {"t", "kt", "eta", "fidelity", "infidelity", "mean_n", "mean_n_exact", "var_n",
                 "mean_x2", "mean_p2", "norm_defect"};
    double max_defect = 0.0;
    for (const auto& r : traj.records) {
        const double exact = analytic::evaluate(r.eta).mean_n;
        t.rows.push_back({r.t / c.physics.omega, ev.schedule.k * r.t, r.eta, r.fidelity, 1.0 - r.fidelity,
                          r.mean_n, exact, r.var_n, r.mean_x2, r.mean_p2, r.norm_defect});
        max_defect = std::max(max_defect, r.norm_defect);
    }
    t.summary["n_max"] = ev.spec.n_max;
    t.summary["kt_end"] = ev.schedule.k * ev.end_time();
    t.summary["min_fidelity"] = traj.min_fidelity();
    t.summary["final_fidelity"] = traj.final().fidelity;
    t.summary["max_norm_defect"] = max_defect;
    t.summary["max_tail_mass"] = traj.max_tail_mass;
    t.summary["steps_accepted"] = traj.stats.accepted;
    t.summary["steps_rejected"] = traj.stats.rejected;
    if (traj.truncation_warning) t.warnings.push_back(*traj.truncation_warning);
    return t;
}

inline Table run_scaling(const ExperimentConfig& c) {
    const ramp::RampSchedule s{c.physics.k / c.physics.omega, c.physics.xi, c.physics.eta_target};
    const auto kts = metrology::log_space(*c.sweep.kt_min, *c.sweep.kt_max, *c.sweep.points);
    const auto rep = metrology::scaling_experiment(s, kts);
    Table t;
    t.columns = {"kt", "t", "eta", "epsilon", "inverted_variance", "mean_n", "heisenberg_ratio", "delta_eta"};
    for (const auto& r : rep.rows)
        t.rows.push_back({r.kt, r.t / c.physics.omega, r.eta, r.epsilon, r.inverted_variance, r.mean_n,
                          r.heisenberg_ratio * c.physics.omega * c.physics.omega, r.delta_eta});
    ojson fits = ojson::array();
    for (const auto& f : rep.fits)
        fits.push_back({{"quantity", std::string(metrology::to_string(f.quantity))},
                        {"fitted_exponent", f.fitted_exponent},
                        {"expected_exponent", f.expected_exponent},
                        {"r_squared", f.r_squared}});
    t.summary["fits"] = std::move(fits);
    t.summary["heisenberg_spread"] = rep.heisenberg_spread;
    return t;
}

inline Table run_cramer_rao(const ExperimentConfig& c) {
    const double eta = *c.sweep.eta;
    Table t;
    t.columns = {"shots", "replicas", "eta", "qfi", "mean_estimate", "var_estimate", "ratio", "ratio_stderr",
                 "clipped"};
    const int cutoff = c.numerics.n_max ? *c.numerics.n_max
                                        : fock::adaptive_n_max(eta, 0, fock::TruncationPolicy{1e-20});
    for (std::size_t shots : *c.sweep.shots_list) {
        const metrology::MeasurementScheme scheme{*c.sweep.observable, shots};
        const auto res = metrology::cramer_rao_study(eta, scheme, c.numerics.replicas, c.numerics.seed, cutoff);
        t.rows.push_back({static_cast<double>(shots), static_cast<double>(res.replicas), eta, res.qfi,
                          res.mean_estimate, res.var_estimate, res.ratio, res.ratio_stderr,
                          static_cast<double>(res.clipped)});
        if (res.warning) t.warnings.push_back(*res.warning);
    }
    t.summary["observable"] = std::string(metrology::to_string(*c.sweep.observable));
    t.summary["n_max"] = cutoff;
    return t;
}

inline Table run_moments_check(const ExperimentConfig& c) {
    Table t;
    t.columns = {"eta", "n_max", "mean_n", "mean_n_exact", "var_n", "var_n_exact", "mean_x2", "mean_x2_exact",
                 "var_x2", "var_x2_exact", "mean_p2", "mean_p2_exact", "var_p2", "var_p2_exact",
                 "qfi_state_derivative", "inv_var_n", "inv_var_x2", "inv_var_p2", "qfi_exact", "max_rel_err"};
    double worst = 0.0;
    for (double eta : linear_grid(*c.sweep.eta_min, *c.sweep.eta_max, *c.sweep.points)) {
        const int cutoff = c.numerics.n_max ? *c.numerics.n_max
                                            : fock::adaptive_n_max(eta, 0, fock::TruncationPolicy{1e-20});
        const auto state = fock::squeezed_vacuum_at(fock::HilbertSpec::field(cutoff), eta);
        if (state.truncation_warning()) t.warnings.push_back(*state.truncation_warning());
        const auto ex = analytic::evaluate(eta);
        const auto mn = metrology::observable_moments(state, metrology::Observable::photon_number);
        const auto mx = metrology::observable_moments(state, metrology::Observable::x_squared);
        const auto mp = metrology::observable_moments(state, metrology::Observable::p_squared);
        auto rel = [](double a, double b) { return b == 0.0 ? std::abs(a) : std::abs(a - b) / std::abs(b); };
        const double err = std::max({rel(mn.mean, ex.mean_n), rel(mn.variance, ex.var_n), rel(mx.mean, ex.mean_x2),
                                     rel(mx.variance, ex.var_x2), rel(mp.mean, ex.mean_p2),
                                     rel(mp.variance, ex.var_p2)});
        worst = std::max(worst, err);
        const double h = c.numerics.d_eta;
        double qfd = std::numeric_limits<double>::quiet_NaN();
        try {
            qfd = analytic::qfi_from_state_derivative(eta, {h, cutoff});
        } catch (const TruncationError& e) {
            t.warnings.push_back(e.what());
        }
        const metrology::InvertedVarianceOptions iv{h, cutoff};
        t.rows.push_back({eta, static_cast<double>(cutoff), mn.mean, ex.mean_n, mn.variance, ex.var_n, mx.mean,
                          ex.mean_x2, mx.variance, ex.var_x2, mp.mean, ex.mean_p2, mp.variance, ex.var_p2, qfd,
                          metrology::inverted_variance_numeric(eta, metrology::Observable::photon_number, iv),
                          metrology::inverted_variance_numeric(eta, metrology::Observable::x_squared, iv),
                          metrology::inverted_variance_numeric(eta, metrology::Observable::p_squared, iv), ex.qfi,
                          err});
    }
    t.summary["max_rel_err"] = worst;
    return t;
}

inline std::string emit(const ExperimentConfig& c, const Table& t) {
    const int prec = c.output.precision;
    if (c.output.format == Format::json) {
        ojson doc;
        doc["meta"] = {{"artifact", "jcsense"},
                       {"version", kVersion},
                       {"basis_order", fock::kBasisOrder},
                       {"units", "Omega = 1; rates in units of Omega, times in units of 1/Omega"},
                       {"config", to_json(c)},
                       {"summary", t.summary},
                       {"warnings", t.warnings},
                       {"columns", t.columns}};
        ojson rows = ojson::array();
        for (const auto& r : t.rows) {
            ojson row = ojson::object();
            for (std::size_t i = 0; i < t.columns.size(); ++i) row[t.columns[i]] = rounded(r[i], prec);
            rows.push_back(std::move(row));
        }
        doc["rows"] = std::move(rows);
        return doc.dump(2) + "\n";
    }
    std::ostringstream os;
    os << "# jcsense " << kVersion << "\n";
    os << "# experiment: " << to_string(c.experiment) << "\n";
    os << "# basis_order: " << fock::kBasisOrder << "\n";
    os << "# units: Omega = 1; rates in units of Omega, times in units of 1/Omega\n";
    os << "# config: " << to_json(c).dump() << "\n";
    os << "# summary: " << t.summary.dump() << "\n";
    for (const auto& w : t.warnings) os << "# warning: " << w << "\n";
    for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
    os << "\n";
    for (const auto& r : t.rows) {
        for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << format_number(r[i], prec);
        os << "\n";
    }
    return os.str();
}

}  // namespace detail

/// Runs the experiment and renders the output document. Under `strict`,
/// truncation and grid warnings become TruncationError.
inline RunResult run(const ExperimentConfig& config, bool strict = false) {
    const ExperimentConfig c = resolve(config);
    validate(c);
    RunResult res;
    switch (c.experiment) {
        case Kind::qfi_curve: res.table = detail::run_qfi_curve(c); break;
        case Kind::ramp_curve: res.table = detail::run_ramp_curve(c); break;
        case Kind::fidelity_sweep: res.table = detail::run_fidelity_sweep(c); break;
        case Kind::scaling: res.table = detail::run_scaling(c); break;
        case Kind::cramer_rao: res.table = detail::run_cramer_rao(c); break;
        case Kind::moments_check: res.table = detail::run_moments_check(c); break;
    }
    if (strict && !res.table.warnings.empty()) throw TruncationError(res.table.warnings.front());
    res.text = detail::emit(c, res.table);
    return res;
}

/// Dry-run report: resolved config plus cost estimates, without executing.
inline ojson validate_report(const ExperimentConfig& config) {
    const ExperimentConfig c = resolve(config);
    validate(c);
    ojson rep;
    rep["status"] = "ok";
    rep["config"] = to_json(c);
    const double k = c.physics.k / c.physics.omega;
    const ramp::RampSchedule s{k, c.physics.xi, c.physics.eta_target};
    const double kt_end = k * ramp::duration(s);
    rep["kt_end"] = kt_end;
    rep["t_end"] = kt_end / k / c.physics.omega;

    int peak_n_max = 0;
    double seconds = 0.01;
    switch (c.experiment) {
        case Kind::fidelity_sweep: {
            peak_n_max = detail::field_cutoff(c, c.physics.eta_target);
            // Calibrated on the k = 1/200 run: ~0.16 ||H|| t_end steps with
            // ||H|| ~ 2 sqrt(n_max), 12 rhs calls per step, ~0.1 us per dimension per call.
            const double steps = 0.16 * 2.0 * std::sqrt(peak_n_max) * (kt_end / k);
            seconds = steps * 12.0 * 2.0 * (peak_n_max + 1) * 1e-7 + c.numerics.samples * 1e-3;
            break;
        }
        case Kind::moments_check:
            peak_n_max = c.numerics.n_max ? *c.numerics.n_max
                                          : fock::adaptive_n_max(*c.sweep.eta_max, 0, fock::TruncationPolicy{1e-20});
            seconds = 0.05 * *c.sweep.points;
            break;
        case Kind::cramer_rao: {
            peak_n_max = c.numerics.n_max ? *c.numerics.n_max
                                          : fock::adaptive_n_max(*c.sweep.eta, 0, fock::TruncationPolicy{1e-20});
            double draws = 0.0;
            for (auto v : *c.sweep.shots_list) draws += static_cast<double>(v) * c.numerics.replicas;
            seconds = draws * 5e-8;
            break;
        }
        default: break;
    }
    rep["peak_n_max"] = peak_n_max;
    rep["peak_dimension"] = c.experiment == Kind::fidelity_sweep ? 2 * (peak_n_max + 1) : peak_n_max + 1;
    rep["estimated_seconds"] = seconds;
    return rep;
}

}  // namespace jcsense::experiment
