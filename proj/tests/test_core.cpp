// test_core.cpp — units, geometry, interaction law and configuration validation
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "generators.hpp"
#include "rydflux/core.hpp"

#include <cmath>
#include <limits>

using namespace rydflux;
using rydflux::testing::Gen;

TEST_CASE("MHz round trip within one ulp") {
    Gen g(1);
    for (int k = 0; k < 10000; ++k) {
        const double f = g.uniform(-1e4, 1e4);
        const double back = to_mhz(from_mhz(f));
        CHECK(std::abs(back - f) <= std::abs(std::nextafter(f, 2 * f + 1.0) - f));
    }
    CHECK(from_mhz(1.0) == doctest::Approx(2.0 * M_PI).epsilon(1e-15));
}

TEST_CASE("van der Waals law") {
    ArrayGeometry g;
    g.sites = {{0, 0}, {5, 0}, {10, 0}};
    const InteractionLaw law{3.0e6};
    SUBCASE("doubling the distance divides by 64") {
        CHECK(pair_interaction(g, law, 0, 1) / pair_interaction(g, law, 0, 2) == doctest::Approx(64.0).epsilon(1e-14));
    }
    SUBCASE("symmetric and signed") {
        CHECK(pair_interaction(g, law, 0, 1) == pair_interaction(g, law, 1, 0));
        CHECK(pair_interaction(g, InteractionLaw{-3.0e6}, 0, 1) < 0.0);
    }
    SUBCASE("identical sites rejected") { CHECK_THROWS_AS(pair_interaction(g, law, 1, 1), std::invalid_argument); }
}

TEST_CASE("rectangular lattice indexing") {
    const auto g = ArrayGeometry::rectangular(3, 2, 5.1, 4.8);
    REQUIRE(g.size() == 6);
    CHECK(g.sites[4].x == doctest::Approx(5.1));
    CHECK(g.sites[4].y == doctest::Approx(4.8));
    CHECK(g.distance(0, 5) == doctest::Approx(std::hypot(10.2, 4.8)));
    CHECK_THROWS_AS(ArrayGeometry::rectangular(0, 2, 1, 1), ConfigError);
}

TEST_CASE("geometry validation") {
    ArrayGeometry g;
    g.sites = {{0, 0}, {0, 0}};
    CHECK_THROWS_AS(check_geometry(g), ConfigError);
    g.sites = {{0, 0}, {1, 0}};
    g.vacancies = {2};
    CHECK_THROWS_AS(check_geometry(g), ConfigError);
    g.vacancies = {1};
    CHECK_NOTHROW(check_geometry(g));
    CHECK(g.active_sites() == std::vector<int>{0});
}

TEST_CASE("channels are shared color labels") {
    DressingConfig cfg;
    cfg.colors = {ColorField{"A", 1.0, {{0, 1.0}, {1, 1.0}}}, ColorField{"B", 2.0, {{1, 1.0}, {2, 1.0}}},
                  ColorField{"C", 3.0, {{2, 1.0}, {0, 1.0}}}};
    CHECK(channels(cfg, 0, 1) == std::set<std::string>{"A"});
    CHECK(channels(cfg, 1, 2) == std::set<std::string>{"B"});
    CHECK(channels(cfg, 0, 2) == std::set<std::string>{"C"});
    CHECK(cfg.colors_at(1) == std::vector<int>{0, 1});
    CHECK(cfg.rabi(1, 0) == cplx(0.0, 0.0));
}

TEST_CASE("validate: hard errors") {
    ArrayGeometry g;
    g.sites = {{0, 0}, {5, 0}};
    const InteractionLaw law{1e6};
    DressingConfig cfg;
    cfg.colors = {ColorField{"A", 0.0, {{0, 1.0}}}};
    CHECK_THROWS_AS(validate(g, cfg, law), ConfigError);
    cfg.colors = {ColorField{"A", 10.0, {{0, 1.0}}}, ColorField{"B", 10.0, {{1, 1.0}}}};
    CHECK_THROWS_AS(validate(g, cfg, law), ConfigError);
    cfg.colors = {ColorField{"A", 10.0, {{0, 1.0}}}, ColorField{"A", 20.0, {{1, 1.0}}}};
    CHECK_THROWS_AS(validate(g, cfg, law), ConfigError);
    cfg.colors = {ColorField{"A", 10.0, {{7, 1.0}}}};
    CHECK_THROWS_AS(validate(g, cfg, law), ConfigError);
    cfg.colors = {ColorField{"A", 10.0, {{0, 1.0}, {1, 1.0}}}};
    CHECK_THROWS_AS(validate(g, cfg, InteractionLaw{0.0}), ConfigError);
    // Delta + V = 0 exactly: perturbative pole.
    const double v = pair_interaction(g, InteractionLaw{1e6}, 0, 1);
    cfg.colors = {ColorField{"A", -v, {{0, 0.1}, {1, 0.1}}}};
    CHECK_THROWS_AS(validate(g, cfg, law), ConfigError);
}

TEST_CASE("validate: diagnostics and warnings") {
    ArrayGeometry g;
    g.sites = {{0, 0}, {5, 0}};
    const InteractionLaw law{1e6};
    const double v = pair_interaction(g, law, 0, 1);
    DressingConfig cfg;
    cfg.colors = {ColorField{"A", 100.0, {{0, 5.0}, {1, 5.0}}}, ColorField{"B", 130.0, {{0, 5.0}}}};
    auto d = validate(g, cfg, law);
    CHECK(d.max_dressing == doctest::Approx(0.05));
    CHECK(d.min_detuning_gap == doctest::Approx(30.0));
    CHECK(d.warnings.empty());
    const double j = 25.0 * v / (4.0 * 100.0 * (100.0 + v));
    CHECK(d.max_crosstalk == doctest::Approx(j / 30.0).epsilon(1e-12));

    SUBCASE("near resonance warns") {
        cfg.colors = {ColorField{"A", -v + 3.0, {{0, 1.0}, {1, 1.0}}}};
        d = validate(g, cfg, law);
        REQUIRE_FALSE(d.warnings.empty());
        CHECK(d.warnings.front().find("resonance") != std::string::npos);
    }
    SUBCASE("strong dressing warns") {
        cfg.colors = {ColorField{"A", 10.0, {{0, 5.0}}}};
        d = validate(g, cfg, law);
        CHECK(d.warnings.size() == 1);
        CHECK(std::isinf(d.min_detuning_gap));
    }
}

TEST_CASE("noise modes") {
    for (auto m : {NoiseSpec::Mode::global, NoiseSpec::Mode::per_color, NoiseSpec::Mode::per_atom})
        CHECK(noise_mode_from_string(to_string(m)) == m);
    CHECK_THROWS_AS(noise_mode_from_string("white"), ConfigError);
    NoiseSpec n;
    n.decay_rate = -1.0;
    CHECK_THROWS_AS(check_noise(n), ConfigError);
}
