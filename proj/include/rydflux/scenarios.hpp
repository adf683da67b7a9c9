// scenarios.hpp — scenario catalog, configuration resolution and runners behind the command-line tool
#pragma once

#include <json.hpp>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace rydflux::scenarios {

inline constexpr const char* version = "1.0.0";

struct ParamSpec {
    std::string key;
    nlohmann::json value;   // default
    std::string unit;       // "2π×MHz", "μm", "μs", "1/μs", "rad", "1" (dimensionless), "count"
    std::string doc;
};

struct ScenarioInfo {
    std::string name;
    std::string reproduces;   // figure-level description of what the scenario regenerates
    std::string summary;
    std::vector<ParamSpec> params;
};

const std::vector<ScenarioInfo>& catalog();
const ScenarioInfo& find(const std::string& name);   // ConfigError listing valid names
std::string catalog_text();

// Run description after merging a JSON config document, flags and overrides.
struct RunSpec {
    std::string scenario;
    std::uint64_t seed{1};
    int jobs{1};
    std::string out{"out"};
    nlohmann::json params;   // fully resolved
};

// Top-level keys: scenario, seed, jobs, out, params. Unknown keys and type mismatches throw ConfigError.
RunSpec resolve(const nlohmann::json& config);
// Applies "a.b.c=value" (value parsed as JSON, else taken as a string) to a config document.
void apply_override(nlohmann::json& config, const std::string& assignment);

struct ScenarioOutput {
    std::map<std::string, std::string> files;   // file name -> CSV / JSON text
    nlohmann::json summary;
};

// Pure computation; same spec gives byte-identical files.
ScenarioOutput run(const RunSpec& spec);

// Writes files, summary.json and manifest.json under spec.out; returns wall time in seconds.
double run_and_write(const RunSpec& spec);

}  // namespace rydflux::scenarios
