#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "jcsense/errors.hpp"
#include "jcsense/experiment.hpp"

namespace {

enum Exit { ok = 0, usage = 1, config = 2, numerical = 3 };

int report(const char* kind, const std::string& message, const std::string& path = {}) {
    nlohmann::ordered_json err{{"error", kind}, {"message", message}};
    if (!path.empty()) err["path"] = path;
    std::cerr << err.dump() << "\n";
    return std::string(kind) == "config" ? Exit::config : Exit::numerical;
}

}  // namespace

int main(int argc, char** argv) {
    namespace ex = jcsense::experiment;
    CLI::App app{"Driven Jaynes-Cummings critical sensing toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    bool strict = false;
    std::optional<std::uint64_t> seed;
    std::string out_path;

    auto* run = app.add_subcommand("run", "Run the experiment described by a config (or a previous output file)");
    run->add_option("config", config_path, "Config JSON, or an emitted CSV/JSON file")->required();
    run->add_flag("--strict", strict, "Treat truncation warnings as errors");
    run->add_option("--seed", seed, "Override numerics.seed");
    run->add_option("--out", out_path, "Output file (default: output.path, or stdout)");

    auto* check = app.add_subcommand("validate", "Check a config and print the resolved form with cost estimates");
    check->add_option("config", config_path, "Config JSON")->required();
    check->add_option("--seed", seed, "Override numerics.seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? Exit::ok : Exit::usage;
    }

    try {
        auto cfg = ex::load_config(config_path);
        if (seed) cfg.numerics.seed = *seed;
        if (!out_path.empty()) cfg.output.path = out_path;

        if (*check) {
            std::cout << ex::validate_report(cfg).dump(2) << "\n";
            return Exit::ok;
        }

        const auto res = ex::run(cfg, strict);
        for (const auto& w : res.table.warnings) std::cerr << "warning: " << w << "\n";
        if (cfg.output.path.empty() || cfg.output.path == "-") {
            std::cout << res.text;
        } else {
            std::ofstream f(cfg.output.path);
            if (!f) return report("config", "cannot write '" + cfg.output.path + "'", "output.path");
            f << res.text;
        }
        return Exit::ok;
    } catch (const jcsense::ConfigError& e) {
        return report("config", e.what(), e.path());
    } catch (const jcsense::TruncationError& e) {
        return report("truncation", e.what());
    } catch (const jcsense::DomainError& e) {
        return report("config", e.what());
    } catch (const jcsense::Error& e) {
        return report("numerical", e.what());
    } catch (const std::exception& e) {
        return report("numerical", e.what());
    }
}
