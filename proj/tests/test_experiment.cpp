#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "jcsense/experiment.hpp"

using namespace jcsense;
using namespace jcsense::experiment;

namespace {

ojson minimal(const char* kind) {
    return ojson{{"experiment", kind}, {"physics", {{"Omega", 1.0}, {"k", 0.005}, {"eta_target", 0.995}}}};
}

std::string expect_config_error(const ojson& j) {
    try {
        validate(resolve(parse_config(j)));
    } catch (const ConfigError& e) {
        return e.path();
    }
    ADD_FAILURE() << "no ConfigError for " << j.dump();
    return {};
}

std::filesystem::path scratch(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "jcsense_tests";
    std::filesystem::create_directories(dir);
    return dir / name;
}

void write(const std::filesystem::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int cli(const std::string& args) {
    const std::string cmd = std::string(JCSENSE_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, StrictParsingReportsFieldPaths) {
    auto j = minimal("qfi_curve");
    j["physics"]["Omgea"] = 1.0;
    EXPECT_EQ(expect_config_error(j), "physics.Omgea");

    j = minimal("qfi_curve");
    j["physics"].erase("Omega");
    EXPECT_EQ(expect_config_error(j), "physics.Omega");

    j = minimal("qfi_curve");
    j["physics"]["eta_target"] = 1.0;
    EXPECT_EQ(expect_config_error(j), "physics.eta_target");

    j = minimal("qfi_curve");
    j["physics"]["k"] = "fast";
    EXPECT_EQ(expect_config_error(j), "physics.k");

    j = minimal("nope");
    EXPECT_EQ(expect_config_error(j), "experiment");

    j = minimal("qfi_curve");
    j["extra"] = 1;
    EXPECT_EQ(expect_config_error(j), "extra");

    j = minimal("cramer_rao");
    j["sweep"] = {{"observable", "spin"}};
    EXPECT_EQ(expect_config_error(j), "sweep.observable");

    j = minimal("scaling");
    j["physics"]["xi"] = 2.0;
    EXPECT_EQ(expect_config_error(j), "physics.xi");

    j = minimal("qfi_curve");
    j["output"] = {{"format", "xml"}};
    EXPECT_EQ(expect_config_error(j), "output.format");

    j = minimal("qfi_curve");
    j["numerics"] = {{"n_max", "huge"}};
    EXPECT_EQ(expect_config_error(j), "numerics.n_max");
}

TEST(Config, ResolvedDefaultsRoundTrip) {
    const auto c = resolve(parse_config(minimal("cramer_rao")));
    const auto again = resolve(parse_config(to_json(c)));
    EXPECT_EQ(to_json(again), to_json(c));
    EXPECT_EQ(*c.sweep.eta, 0.8);
    EXPECT_EQ(c.sweep.shots_list->front(), 10000u);
}

TEST(Experiments, QfiCurveMatchesAnalytic) {
    const auto res = run(parse_config(minimal("qfi_curve")));
    ASSERT_EQ(res.table.rows.size(), 200u);
    EXPECT_TRUE(res.table.summary["qfi_monotone"].get<bool>());
    for (const auto& r : res.table.rows) EXPECT_EQ(r[1], analytic::qfi(r[0]));
    EXPECT_EQ(res.table.rows.back()[0], 0.995);
}

TEST(Experiments, RampCurveHitsKtOne) {
    const auto res = run(parse_config(minimal("ramp_curve")));
    bool found = false;
    for (const auto& r : res.table.rows)
        if (std::abs(r[0] - 1.0) < 1e-12) {
            EXPECT_NEAR(r[2], 1.0 / std::sqrt(2.0), 1e-12);
            found = true;
        }
    EXPECT_TRUE(found);
    EXPECT_NEAR(res.table.summary["kt_end"].get<double>(), 31.44, 0.01);
    EXPECT_EQ(res.table.rows.back()[2], 0.995);
}

TEST(Experiments, OmegaOnlyRescalesTime) {
    auto j = minimal("ramp_curve");
    const auto a = run(parse_config(j)).table;
    j["physics"]["Omega"] = 2.0;
    j["physics"]["k"] = 0.01;
    const auto b = run(parse_config(j)).table;
    ASSERT_EQ(a.rows.size(), b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        EXPECT_EQ(a.rows[i][0], b.rows[i][0]);
        EXPECT_NEAR(a.rows[i][1], 2.0 * b.rows[i][1], 1e-9 * (1.0 + a.rows[i][1]));
        EXPECT_NEAR(a.rows[i][2], b.rows[i][2], 1e-14);
    }
}

TEST(Experiments, MomentsCheckIsConsistent) {
    auto j = minimal("moments_check");
    j["sweep"] = {{"eta_min", 0.3}, {"eta_max", 0.8}, {"points", 3}};
    const auto res = run(parse_config(j));
    EXPECT_LT(res.table.summary["max_rel_err"].get<double>(), 1e-8);
    for (const auto& r : res.table.rows)
        for (int col : {14, 15, 16, 17}) EXPECT_NEAR(r[col] / r[18], 1.0, 1e-3);
}

TEST(Experiments, CramerRaoDeterministicWithSeed) {
    auto j = minimal("cramer_rao");
    j["numerics"] = {{"replicas", 50}, {"seed", 7}};
    j["sweep"] = {{"shots_list", {100, 1000}}};
    const auto a = run(parse_config(j));
    const auto b = run(parse_config(j));
    EXPECT_EQ(a.text, b.text);
    j["numerics"]["seed"] = 8;
    EXPECT_NE(run(parse_config(j)).text, a.text);
}

TEST(Experiments, StrictEscalatesTruncation) {
    auto j = minimal("moments_check");
    j["numerics"] = {{"n_max", 8}};
    j["sweep"] = {{"eta_min", 0.8}, {"eta_max", 0.9}, {"points", 2}};
    const auto relaxed = run(parse_config(j));
    EXPECT_FALSE(relaxed.table.warnings.empty());
    EXPECT_THROW(run(parse_config(j), true), TruncationError);
}

TEST(Emit, CsvHeaderAndFrozenColumns) {
    const auto res = run(parse_config(minimal("scaling")));
    std::istringstream in(res.text);
    std::string line, columns;
    while (std::getline(in, line) && line[0] == '#') {}
    EXPECT_EQ(line, "kt,t,eta,epsilon,inverted_variance,mean_n,heisenberg_ratio,delta_eta");
    EXPECT_NE(res.text.find("# basis_order: field-fast"), std::string::npos);
    EXPECT_NE(res.text.find("# config: {"), std::string::npos);
}

TEST(Emit, JsonMirrorsCsv) {
    auto j = minimal("scaling");
    j["output"] = {{"format", "json"}};
    const auto res = run(parse_config(j));
    const auto doc = ojson::parse(res.text);
    EXPECT_EQ(doc["meta"]["columns"].size(), res.table.columns.size());
    EXPECT_EQ(doc["rows"].size(), res.table.rows.size());
    EXPECT_EQ(doc["rows"][0].begin().key(), "kt");
}

TEST(Emit, RerunFromEmittedHeaderReproduces) {
    for (const char* fmt : {"csv", "json"}) {
        auto j = minimal("cramer_rao");
        j["numerics"] = {{"replicas", 20}};
        j["sweep"] = {{"shots_list", {50}}};
        j["output"] = {{"format", fmt}};
        const auto first = run(parse_config(j));
        const auto path = scratch(std::string("rerun.") + fmt);
        write(path, first.text);
        EXPECT_EQ(run(load_config(path.string())).text, first.text) << fmt;
    }
}

TEST(Cli, ExitCodesAndReproducibility) {
    const auto out1 = scratch("cli_a.csv"), out2 = scratch("cli_b.csv");
    const std::string cfg = std::string(JCSENSE_CONFIG_DIR) + "/qfi_curve.json";
    EXPECT_EQ(cli("run " + cfg + " --out " + out1.string()), 0);
    EXPECT_EQ(cli("run " + out1.string() + " --out " + out2.string()), 0);
    EXPECT_EQ(slurp(out1), slurp(out2));
    EXPECT_EQ(cli("validate " + cfg), 0);

    const auto bad = scratch("bad.json");
    auto j = minimal("qfi_curve");
    j["physics"]["eta_target"] = 1.0;
    write(bad, j.dump());
    EXPECT_EQ(cli("validate " + bad.string()), 2);
    EXPECT_EQ(cli("run " + bad.string()), 2);
    EXPECT_EQ(cli("run /nonexistent.json"), 2);

    auto t = minimal("moments_check");
    t["numerics"] = {{"n_max", 8}};
    t["sweep"] = {{"eta_min", 0.8}, {"eta_max", 0.9}, {"points", 2}};
    const auto trunc = scratch("trunc.json");
    write(trunc, t.dump());
    EXPECT_EQ(cli("run " + trunc.string() + " --out " + scratch("t.csv").string()), 0);
    EXPECT_EQ(cli("run --strict " + trunc.string()), 3);
}

TEST(Cli, SeedFlagOverridesConfig) {
    const std::string cfg = std::string(JCSENSE_CONFIG_DIR) + "/cramer_rao.json";
    const auto a = scratch("seed_a.csv"), b = scratch("seed_b.csv"), c = scratch("seed_c.csv");
    ASSERT_EQ(cli("run " + cfg + " --seed 5 --out " + a.string()), 0);
    ASSERT_EQ(cli("run " + cfg + " --seed 5 --out " + b.string()), 0);
    ASSERT_EQ(cli("run " + cfg + " --seed 6 --out " + c.string()), 0);
    EXPECT_EQ(slurp(a), slurp(b));
    EXPECT_NE(slurp(a), slurp(c));
    EXPECT_NE(slurp(a).find("\"seed\":5"), std::string::npos);
}

TEST(Validate, ReportsKtEndAndCost) {
    auto j = minimal("fidelity_sweep");
    j["numerics"] = {{"n_max", 128}};
    const auto rep = validate_report(parse_config(j));
    EXPECT_NEAR(rep["kt_end"].get<double>(), 31.4, 0.05);
    EXPECT_EQ(rep["peak_dimension"].get<int>(), 258);
    EXPECT_GT(rep["estimated_seconds"].get<double>(), 0.0);
}
