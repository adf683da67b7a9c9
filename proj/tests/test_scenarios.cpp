// test_scenarios.cpp — configuration resolution, overrides, catalog and reproducible outputs
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rydflux/core.hpp"
#include "rydflux/scenarios.hpp"

#include <filesystem>
#include <fstream>
#include <set>

using namespace rydflux;
namespace sc = rydflux::scenarios;
using nlohmann::json;

TEST_CASE("catalog: names are unique and units come from a fixed vocabulary") {
    const std::set<std::string> units = {"2π×MHz", "μm", "μs", "1/μs", "rad", "1", "count"};
    std::set<std::string> names;
    for (const auto& s : sc::catalog()) {
        CHECK(names.insert(s.name).second);
        CHECK_FALSE(s.summary.empty());
        for (const auto& p : s.params) {
            INFO(s.name << "." << p.key);
            CHECK(units.count(p.unit) == 1);
            CHECK_FALSE(p.doc.empty());
        }
    }
    CHECK(names.size() == 13);
    CHECK(sc::catalog_text().find("two_atom_transfer") != std::string::npos);
}

TEST_CASE("unknown scenario lists the valid names") {
    try {
        sc::find("nope");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("floquet_oracle") != std::string::npos);
    }
}

TEST_CASE("resolve merges defaults and validates") {
    auto spec = sc::resolve({{"scenario", "power_budget"}});
    CHECK(spec.seed == 1);
    CHECK(spec.jobs == 1);
    CHECK(spec.params.contains("n_colors"));

    spec = sc::resolve({{"scenario", "power_budget"}, {"seed", 9}, {"jobs", 2}, {"params", {{"n_colors", 3}}}});
    CHECK(spec.seed == 9);
    CHECK(spec.params["n_colors"] == 3);

    CHECK_THROWS_AS(sc::resolve(json::array()), ConfigError);
    CHECK_THROWS_AS(sc::resolve({{"seed", 1}}), ConfigError);
    CHECK_THROWS_AS(sc::resolve({{"scenario", "power_budget"}, {"colour", 1}}), ConfigError);
    CHECK_THROWS_AS(sc::resolve({{"scenario", "power_budget"}, {"seed", -1}}), ConfigError);
    CHECK_THROWS_AS(sc::resolve({{"scenario", "power_budget"}, {"jobs", 0}}), ConfigError);
    CHECK_THROWS_AS(sc::resolve({{"scenario", "power_budget"}, {"params", {{"bogus", 1}}}}), ConfigError);
    CHECK_THROWS_AS(sc::resolve({{"scenario", "power_budget"}, {"params", {{"n_colors", "four"}}}}), ConfigError);
    CHECK_THROWS_AS(sc::resolve({{"scenario", "power_budget"}, {"params", 3}}), ConfigError);
    // Too short for the envelope fit; rejected before any trajectory runs.
    CHECK_THROWS_AS(sc::run(sc::resolve({{"scenario", "phase_noise"}, {"params", {{"chiral_periods", 1.0}}}})), ConfigError);
}

TEST_CASE("overrides") {
    json c = {{"scenario", "power_budget"}};
    sc::apply_override(c, "params.n_colors=3");
    sc::apply_override(c, "seed=5");
    sc::apply_override(c, "out=some dir");
    CHECK(c["params"]["n_colors"] == 3);
    CHECK(c["seed"] == 5);
    CHECK(c["out"] == "some dir");
    sc::apply_override(c, "params.j=[1,2]");
    CHECK(c["params"]["j"].is_array());
    CHECK_THROWS_AS(sc::apply_override(c, "novalue"), ConfigError);
    CHECK_THROWS_AS(sc::apply_override(c, "=3"), ConfigError);
    CHECK_THROWS_AS(sc::apply_override(c, "params..x=3"), ConfigError);
    CHECK_THROWS_AS(sc::apply_override(c, "seed.x=3"), ConfigError);
}

TEST_CASE("same spec gives byte-identical output") {
    for (const char* name : {"two_atom_transfer", "power_budget", "hopping_vs_spacing"}) {
        INFO(name);
        const auto spec = sc::resolve({{"scenario", name}});
        const auto a = sc::run(spec), b = sc::run(spec);
        CHECK(a.files == b.files);
        CHECK(a.summary.dump() == b.summary.dump());
    }
}

TEST_CASE("seeded scenarios do not depend on the thread count") {
    auto c = json{{"scenario", "decay_postselect"}, {"seed", 3}};
    sc::apply_override(c, "params.runs=40");
    sc::apply_override(c, "params.n_times=11");
    auto spec = sc::resolve(c);
    const auto one = sc::run(spec);
    spec.jobs = 3;
    CHECK(sc::run(spec).files == one.files);
    spec.seed = 4;
    CHECK(sc::run(spec).files != one.files);
}

TEST_CASE("run_and_write produces summary and manifest") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "rydflux_test_out";
    fs::remove_all(dir);
    auto spec = sc::resolve({{"scenario", "power_budget"}, {"out", dir.string()}});
    sc::run_and_write(spec);
    REQUIRE(fs::exists(dir / "manifest.json"));
    REQUIRE(fs::exists(dir / "summary.json"));
    std::ifstream in(dir / "manifest.json");
    const auto m = json::parse(in);
    CHECK(m["scenario"] == "power_budget");
    CHECK(m["units"]["beam_waist"] == "μm");
    CHECK(m["files"].size() == 1);
    fs::remove_all(dir);
}
