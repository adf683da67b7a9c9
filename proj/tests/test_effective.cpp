// test_effective.cpp — hoppings, potentials, flux, balancing, doublon model and power budget
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "generators.hpp"
#include "rydflux/effective.hpp"

#include <cmath>

using namespace rydflux;
using rydflux::testing::Gen;

namespace {

struct Pair {
    ArrayGeometry g;
    InteractionLaw law{1.0e7};
    DressingConfig cfg;
};

Pair two_atoms(double r, double delta, cplx o0, cplx o1) {
    Pair p;
    p.g.sites = {{0, 0}, {r, 0}};
    p.cfg.colors = {ColorField{"A", delta, {{0, o0}, {1, o1}}}};
    return p;
}

}  // namespace

TEST_CASE("two-atom hopping and potential match the closed forms") {
    const double delta = from_mhz(120.0), v_r = 5.0;
    const cplx o0 = std::polar(from_mhz(10.0), 0.3), o1 = std::polar(from_mhz(8.0), -1.1);
    auto p = two_atoms(v_r, delta, o0, o1);
    const double v = p.law.c6 / std::pow(v_r, 6);
    const cplx j = hopping_strength(p.cfg, p.law, p.g, 0, 1, "A");
    CHECK(std::abs(j - o0 * std::conj(o1) * v / (4.0 * delta * (delta + v))) < 1e-12 * std::abs(j));
    const double mu0 = std::norm(o0) / (4.0 * delta) - std::norm(o1) / (4.0 * (delta + v));
    CHECK(chemical_potential(p.cfg, p.law, p.g, 0) == doctest::Approx(mu0).epsilon(1e-13));
    const auto m = build_effective_model(p.cfg, p.law, p.g);
    CHECK(std::abs(m.hopping(0, 1) - j) < 1e-15);
    CHECK(std::abs(m.hopping(1, 0) - std::conj(j)) < 1e-15);
    CHECK(m.density_interaction(0, 1) == doctest::Approx(v));
}

TEST_CASE("frozen reference: |J| at 2pi x (10, 120) MHz and V = 2pi x 970 MHz") {
    // Hand value: 100 * 970 / (4 * 120 * 1090) MHz.
    const double v = from_mhz(970.0);
    const double r = std::pow(1.0e7 / v, 1.0 / 6.0);
    auto p = two_atoms(r, from_mhz(120.0), from_mhz(10.0), from_mhz(10.0));
    CHECK(to_mhz(std::abs(hopping_strength(p.cfg, p.law, p.g, 0, 1, "A"))) == doctest::Approx(0.18539755351681957).epsilon(1e-12));
}

TEST_CASE("hopping saturates at Omega^2 / 4 Delta for V -> infinity") {
    auto p = two_atoms(0.05, from_mhz(100.0), from_mhz(10.0), from_mhz(10.0));
    CHECK(std::abs(hopping_strength(p.cfg, p.law, p.g, 0, 1, "A")) ==
          doctest::Approx(std::pow(from_mhz(10.0), 2) / (4.0 * from_mhz(100.0))).epsilon(1e-6));
}

TEST_CASE("no channel, no hopping") {
    ArrayGeometry g;
    g.sites = {{0, 0}, {5, 0}};
    DressingConfig cfg;
    cfg.colors = {ColorField{"A", 100.0, {{0, 5.0}}}, ColorField{"B", 130.0, {{1, 5.0}}}};
    const auto m = build_effective_model(cfg, InteractionLaw{1e6}, g);
    CHECK(m.hopping(0, 1) == cplx(0.0, 0.0));
    CHECK_THROWS_AS(hopping_strength(cfg, InteractionLaw{1e6}, g, 0, 1, "A"), std::invalid_argument);
}

TEST_CASE("property: effective model is Hermitian with zero diagonal") {
    Gen gen(11);
    const auto law = rydflux::testing::reference_law();
    for (int t = 0; t < 50; ++t) {
        const int n = gen.integer(2, 6);
        const auto g = gen.geometry(n, 3.5, 12.0);
        const auto cfg = gen.config(n, gen.integer(1, 4));
        const auto m = build_effective_model(cfg, law, g);
        CHECK((m.hopping - m.hopping.adjoint()).cwiseAbs().maxCoeff() < 1e-15);
        CHECK(m.hopping.diagonal().cwiseAbs().maxCoeff() == 0.0);
        CHECK((m.density_interaction - m.density_interaction.transpose()).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("property: monochromatic dressing carries no flux around any cycle") {
    Gen gen(12);
    const auto law = rydflux::testing::reference_law();
    for (int t = 0; t < 100; ++t) {
        const int n = gen.integer(3, 7);
        const auto g = gen.geometry(n, 3.5, 12.0);
        const auto cfg = gen.monochromatic(n);
        const auto m = build_effective_model(cfg, law, g);
        std::vector<int> loop(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) loop[static_cast<std::size_t>(i)] = i;
        std::shuffle(loop.begin(), loop.end(), gen.rng);
        loop.resize(static_cast<std::size_t>(gen.integer(3, n)));
        CHECK(std::abs(plaquette_flux(m, loop).wrapped) < 1e-12);
    }
}

TEST_CASE("property: flux is invariant under local gauge phases") {
    Gen gen(13);
    const auto law = rydflux::testing::reference_law();
    for (int t = 0; t < 30; ++t) {
        const auto g = gen.geometry(3);
        DressingConfig cfg;
        cfg.colors = {ColorField{"A", from_mhz(120.0), {{0, from_mhz(10.0)}, {1, from_mhz(10.0)}}},
                      ColorField{"B", from_mhz(140.0), {{1, from_mhz(10.0)}, {2, from_mhz(10.0)}}},
                      ColorField{"C", from_mhz(160.0), {{2, from_mhz(10.0)}, {0, gen.phase() * from_mhz(10.0)}}}};
        const double before = plaquette_flux(build_effective_model(cfg, law, g), {0, 1, 2}).wrapped;
        // Same phase on every color of one atom: a gauge transformation.
        const int site = gen.integer(0, 2);
        const cplx u = gen.phase();
        for (auto& c : cfg.colors)
            if (c.rabi.count(site)) c.rabi[site] *= u;
        const double after = plaquette_flux(build_effective_model(cfg, law, g), {0, 1, 2}).wrapped;
        CHECK(std::abs(wrap_angle(after - before)) < 1e-12);
    }
}

TEST_CASE("three-color triangle flux equals the imprinted phase") {
    ArrayGeometry g;
    g.sites = {{0, 0}, {5, 0}, {2.5, 5 * std::sqrt(3.0) / 2}};
    const double phi = 1.234;
    DressingConfig cfg;
    cfg.colors = {ColorField{"A", from_mhz(120.0), {{0, from_mhz(10.0)}, {1, from_mhz(10.0)}}},
                  ColorField{"B", from_mhz(140.0), {{1, from_mhz(10.0)}, {2, from_mhz(10.0)}}},
                  ColorField{"C", from_mhz(160.0), {{2, from_mhz(10.0)}, {0, std::polar(from_mhz(10.0), phi)}}}};
    const auto m = build_effective_model(cfg, rydflux::testing::reference_law(), g);
    // Loop 0 -> 1 -> 2: J_{0,2} carries +phi, the return link 2 -> 0 contributes arg J_{0,2}.
    CHECK(plaquette_flux(m, {0, 1, 2}).wrapped == doctest::Approx(phi).epsilon(1e-12));
    CHECK(plaquette_flux(m, {0, 2, 1}).wrapped == doctest::Approx(-phi).epsilon(1e-12));
    CHECK_THROWS_AS(plaquette_flux(m, {0}), std::invalid_argument);
}

TEST_CASE("wrap_angle range") {
    CHECK(wrap_angle(M_PI) == doctest::Approx(M_PI));
    CHECK(wrap_angle(-M_PI) == doctest::Approx(M_PI));
    CHECK(wrap_angle(3 * M_PI / 2) == doctest::Approx(-M_PI / 2));
    CHECK(wrap_angle(4 * M_PI / 3) == doctest::Approx(-2 * M_PI / 3));
}

TEST_CASE("balance_potentials equalizes on-site energies") {
    Gen gen(14);
    const auto law = rydflux::testing::reference_law();
    for (int t = 0; t < 20; ++t) {
        const int n = gen.integer(2, 5);
        const auto g = gen.geometry(n, 4.0, 8.0);
        const auto cfg = gen.config(n, 3, 0.08);
        const int ref = gen.integer(0, n - 1);
        const auto res = balance_potentials(cfg, law, g, ref);
        double max_det = 0.0;
        for (const auto& c : cfg.colors) max_det = std::max(max_det, std::abs(c.detuning));
        CHECK(res.residual < 1e-9 * max_det);
        const auto m = build_effective_model(res.config, law, g);
        for (int i = 0; i < n; ++i) CHECK(std::abs(m.potential(i) - m.potential(ref)) < 1e-9 * max_det);
        CHECK(res.config.shift(ref) == 0.0);
    }
    DressingConfig bare;
    bare.colors = {ColorField{"A", 100.0, {{1, 5.0}}}};
    ArrayGeometry g;
    g.sites = {{0, 0}, {5, 0}};
    CHECK_THROWS_AS(balance_potentials(bare, law, g, 0), std::invalid_argument);
}

TEST_CASE("dimer hop reduces to the two-body formula with shifted detuning") {
    ArrayGeometry g;
    const double r = 5.0;
    g.sites = {{0, 0}, {r, 0}, {r / 2, r * std::sqrt(3.0) / 2}};
    const InteractionLaw law{1e7};
    DressingConfig cfg;
    cfg.colors = {ColorField{"A", from_mhz(150.0), {{0, 10.0}, {1, 12.0}, {2, 9.0}}}};
    const double v = law.c6 / std::pow(r, 6);
    const double d = from_mhz(150.0);
    const cplx expect = cplx(9.0 * 12.0) * v / (4.0 * (d + v) * (d + 2 * v));
    CHECK(std::abs(dimer_hop(cfg, law, g, 0, 1, 2, "A") - expect) < 1e-12 * std::abs(expect));
    g.sites[2] = {r / 2, r};
    CHECK_THROWS_AS(dimer_hop(cfg, law, g, 0, 1, 2, "A"), std::invalid_argument);
}

TEST_CASE("doublon center-of-mass model doubles the flux") {
    Gen gen(15);
    for (int t = 0; t < 100; ++t) {
        const double phi = gen.uniform(-10.0, 10.0);
        const auto d = doublon_com_model(1.0, 1.5, phi, -50.0, 60.0, 70.0);
        CHECK(std::abs(wrap_angle(d.com_flux - 2.0 * phi)) == 0.0);
        CHECK(d.com_flux_raw == 2.0 * phi);
    }
    const auto d = doublon_com_model(1.0, 2.0, 0.3, 10.0, 20.0, 40.0);
    CHECK(d.com_hopping_x == doctest::Approx(0.1));
    CHECK(d.com_hopping_y == doctest::Approx(0.5));
    CHECK_THROWS(doublon_com_model(1.0, 1.0, 0.0, 0.0, 1.0, 1.0));
}

TEST_CASE("power budget against an independent evaluation") {
    const double j = from_mhz(0.5), eps_b = 0.01, eps_c = 0.01, w0 = 2.0, d = 0.01;
    const int n = 16;
    const auto pb = power_budget(j, eps_b, eps_c, w0, n, d);
    const double hbar = 1.054571817e-34, a0 = 5.29177210903e-11, alpha = 7.2973525693e-3;
    const double hand = (std::pow(w0 * 1e-6, 2) * n * hbar / (2.0 * alpha * std::pow(d * a0, 2))) * std::pow(j * 1e6, 2) *
                        (8.0 / eps_b + 3.0 / std::sqrt(eps_c));
    CHECK(pb.total_power_closed_form == doctest::Approx(hand).epsilon(1e-10));
    CHECK(pb.total_power == doctest::Approx(hand).epsilon(1e-10));
    CHECK(pb.detuning == doctest::Approx(j * 400.0));
    CHECK(pb.color_gap == doctest::Approx(j * 10.0));
    REQUIRE(pb.rabi.size() == 4);
    for (std::size_t k = 1; k < 4; ++k) CHECK(pb.rabi[k] > pb.rabi[k - 1]);
    const auto doubled = power_budget(2 * j, eps_b, eps_c, w0, n, d);
    CHECK(doubled.total_power == doctest::Approx(4 * pb.total_power).epsilon(1e-12));
    CHECK(power_budget(j, eps_b / 2, eps_c, w0, n, d).total_power > pb.total_power);
    CHECK_THROWS_AS(power_budget(j, 0.0, eps_c, w0, n, d), std::invalid_argument);
}

TEST_CASE("model JSON round trip") {
    Gen gen(16);
    const auto g = gen.geometry(4);
    const auto m = build_effective_model(gen.config(4, 3), rydflux::testing::reference_law(), g);
    const auto back = effective_model_from_json(nlohmann::json::parse(to_json(m).dump()));
    CHECK(back.n_sites == m.n_sites);
    CHECK((back.hopping - m.hopping).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.potential - m.potential).cwiseAbs().maxCoeff() == 0.0);
    CHECK(hopping_table_csv(m).rfind("i,j,abs_J,arg_J\n", 0) == 0);
}
