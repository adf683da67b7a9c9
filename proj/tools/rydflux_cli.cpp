// rydflux_cli.cpp — command-line runner for the scenario catalog
#include "rydflux/core.hpp"
#include "rydflux/scenarios.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>

namespace sc = rydflux::scenarios;

int main(int argc, char** argv) {
    CLI::App app{"rydflux: multicolor Rydberg-dressing flux simulator"};
    app.set_version_flag("--version", std::string(sc::version));
    app.require_subcommand(0, 1);

    auto* list = app.add_subcommand("list_scenarios", "print the scenario catalog");
    std::string config_path, scenario, out;
    std::uint64_t seed = 0;
    int jobs = 0;
    std::vector<std::string> overrides;
    app.add_option("--config", config_path, "JSON config (scenario, seed, jobs, out, params)")->check(CLI::ExistingFile);
    app.add_option("--scenario", scenario, "scenario name (overrides the config)");
    auto* seed_opt = app.add_option("--seed", seed, "random seed");
    auto* jobs_opt = app.add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("--out", out, "output directory");
    app.add_option("--override", overrides, "key=value, e.g. params.n_times=21 (repeatable)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (*list) {
        std::cout << sc::catalog_text();
        return 0;
    }
    try {
        nlohmann::json config = nlohmann::json::object();
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            try {
                config = nlohmann::json::parse(in);
            } catch (const nlohmann::json::parse_error& e) {
                throw rydflux::ConfigError(std::string("config: ") + e.what());
            }
        }
        if (!scenario.empty()) config["scenario"] = scenario;
        if (*seed_opt) config["seed"] = seed;
        if (*jobs_opt) config["jobs"] = jobs;
        if (!out.empty()) config["out"] = out;
        for (const auto& o : overrides) sc::apply_override(config, o);
        const auto spec = sc::resolve(config);
        const double wall = sc::run_and_write(spec);
        std::cout << spec.scenario << ": wrote " << spec.out << " in " << wall << " s\n";
        return 0;
    } catch (const rydflux::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
