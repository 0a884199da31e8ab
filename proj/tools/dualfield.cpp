// dualfield run <config> [--out DIR] [--seed N] [--override section.key=value ...]
//
// Exit codes: 0 success, 1 configuration error, 2 numerical precondition
// failure, 3 a scenario check exceeded its tolerance.

#include <CLI11.hpp>
#include <iostream>
#include <string>
#include <vector>

#include "dualfield/scenario.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfig = 1;
constexpr int kPrecondition = 2;
constexpr int kInvariant = 3;

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Electric-magnetic duality scenarios"};
    app.require_subcommand(1);

    std::string config;
    std::string out;
    long long seed = -1;
    std::vector<std::string> overrides;
    CLI::App* run = app.add_subcommand("run", "Run one scenario from an INI config");
    run->add_option("config", config, "Scenario configuration file")->required();
    run->add_option("--out", out, "Output directory (overrides [output] dir)");
    run->add_option("--seed", seed, "Random seed (overrides [run] seed)")->check(CLI::NonNegativeNumber);
    run->add_option("--override", overrides, "section.key=value, repeatable")->take_all();

    CLI::App* list = app.add_subcommand("list", "Print the scenario names");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "dualfield: " << e.what() << "\n";
        return kConfig;
    }

    if (list->parsed()) {
        for (const auto& n : dualfield::scenario_names()) std::cout << n << "\n";
        return kOk;
    }

    try {
        if (seed >= 0) overrides.push_back("run.seed=" + std::to_string(seed));
        if (!out.empty()) overrides.push_back("output.dir=" + out);
        const dualfield::ScenarioConfig cfg = dualfield::load_config(config, overrides);
        const dualfield::ScenarioResult r = dualfield::run_scenario(cfg);
        std::cout << "scenario " << cfg.name << ": " << (r.summary.passed() ? "pass" : "fail") << " ("
                  << r.summary_path.string() << ")\n";
        if (!r.summary.passed()) {
            for (const auto& f : r.summary.failed()) std::cerr << "check failed: " << f << "\n";
            return kInvariant;
        }
        return kOk;
    } catch (const dualfield::ConfigError& e) {
        std::cerr << "dualfield: config error: " << e.what() << "\n";
        return kConfig;
    } catch (const dualfield::Error& e) {
        std::cerr << "dualfield: precondition failed: " << e.what() << "\n";
        return kPrecondition;
    } catch (const std::exception& e) {
        std::cerr << "dualfield: " << e.what() << "\n";
        return kPrecondition;
    }
}
