// test_dynamics.cpp — exact propagator, effective evolution and observables
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "generators.hpp"
#include "rydflux/dynamics.hpp"

#include <cmath>

using namespace rydflux;
using rydflux::testing::Gen;

namespace {

std::vector<double> grid(double t_end, int n) {
    std::vector<double> t;
    for (int i = 0; i < n; ++i) t.push_back(t_end * i / (n - 1));
    return t;
}

StateVector excite(int n_sites, Config c) {
    return StateVector::product(std::make_shared<SectorBasis>(SectorBasis::full(n_sites)), c);
}

}  // namespace

TEST_CASE("no drive: populations are frozen") {
    ArrayGeometry g;
    g.sites = {{0, 0}, {5, 0}, {0, 5}};
    DressingConfig cfg;
    cfg.colors = {ColorField{"A", from_mhz(100.0), {{0, 0.0}, {1, 0.0}}}};
    const auto r = evolve_full(g, cfg, rydflux::testing::reference_law(), excite(3, 0b011), grid(0.05, 6));
    for (Eigen::Index t = 0; t < r.populations.rows(); ++t) {
        CHECK(r.populations(t, 0) == doctest::Approx(1.0).epsilon(1e-13));
        CHECK(r.populations(t, 1) == doctest::Approx(1.0).epsilon(1e-13));
        CHECK(r.populations(t, 2) == doctest::Approx(0.0));
    }
}

TEST_CASE("property: exact evolution conserves the norm") {
    Gen gen(31);
    for (int t = 0; t < 5; ++t) {
        const auto g = gen.geometry(3);
        const auto cfg = gen.config(3, 2, 0.1);
        const auto r = evolve_full(g, cfg, rydflux::testing::reference_law(), excite(3, 0b001), grid(0.02, 5));
        CHECK(r.max_norm_drift < 1e-10);
        for (Eigen::Index k = 0; k < r.excitation_number.rows(); ++k)
            CHECK(r.excitation_number.row(k).sum() == doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("effective two-site exchange follows sin^2(|J| t)") {
    EffectiveModel m;
    m.n_sites = 2;
    const cplx j = std::polar(0.7, 0.4);
    m.hopping = Eigen::MatrixXcd::Zero(2, 2);
    m.hopping(0, 1) = j;
    m.hopping(1, 0) = std::conj(j);
    m.potential = Eigen::VectorXd::Zero(2);
    m.density_interaction = Eigen::MatrixXd::Zero(2, 2);
    const auto times = grid(3.0, 31);
    const auto r = evolve_effective(m, excite(2, 0b01), times, 1);
    for (std::size_t k = 0; k < times.size(); ++k)
        CHECK(r.populations(static_cast<Eigen::Index>(k), 1) == doctest::Approx(std::pow(std::sin(0.7 * times[k]), 2)).epsilon(1e-10));
    CHECK_THROWS_AS(evolve_effective(m, excite(2, 0b11), times, 1), std::invalid_argument);
    CHECK_THROWS_AS(evolve_effective(m, excite(2, 0b01), times, 3), std::invalid_argument);
}

TEST_CASE("effective Hamiltonian is Hermitian and conserves excitation number") {
    Gen gen(32);
    const auto g = gen.geometry(5, 3.5, 12.0);
    const auto m = build_effective_model(gen.config(5, 3), rydflux::testing::reference_law(), g);
    for (int n = 0; n <= 5; ++n) {
        const auto b = SectorBasis::fixed(5, n);
        const Eigen::MatrixXcd h(effective_hamiltonian(m, b));
        CHECK(h.rows() == static_cast<Eigen::Index>(b.dim()));
        CHECK((h - h.adjoint()).cwiseAbs().maxCoeff() < 1e-14);
    }
}

TEST_CASE("no-jump decay: norm^2 = exp(-kappa N t)") {
    EffectiveModel m;
    m.n_sites = 3;
    m.hopping = Eigen::MatrixXcd::Zero(3, 3);
    m.hopping(0, 1) = m.hopping(1, 0) = 0.5;
    m.hopping(1, 2) = m.hopping(2, 1) = 0.3;
    m.potential = Eigen::VectorXd::Zero(3);
    m.density_interaction = Eigen::MatrixXd::Zero(3, 3);
    EffectiveOptions opt;
    opt.decay_rate = 0.2;
    const auto times = grid(5.0, 11);
    const auto r = evolve_effective(m, excite(3, 0b011), times, 2, opt);
    for (std::size_t k = 0; k < times.size(); ++k)
        CHECK(std::pow(r.norm(static_cast<Eigen::Index>(k)), 2) == doctest::Approx(std::exp(-0.4 * times[k])).epsilon(1e-10));
}

TEST_CASE("exact two-atom transfer tracks the effective model") {
    // Weak dressing: Omega/Delta = 0.05, V comparable to Delta.
    ArrayGeometry g;
    const InteractionLaw law{from_mhz(200.0) * std::pow(5.0, 6)};
    g.sites = {{0, 0}, {5, 0}};
    const double delta = from_mhz(200.0), omega = 0.05 * delta;
    DressingConfig cfg;
    cfg.colors = {ColorField{"A", delta, {{0, omega}, {1, omega}}}};
    const auto m = build_effective_model(cfg, law, g);
    const double period = M_PI / std::abs(m.hopping(0, 1));
    const auto times = grid(0.5 * period, 11);
    const auto exact = evolve_full(g, cfg, law, excite(2, 0b01), times);
    const auto eff = evolve_effective(m, excite(2, 0b01), times, 1);
    const auto d = compare_runs(exact, eff);
    CHECK(d.max_l1 < 0.02);
    CHECK(exact.populations(10, 1) > 0.97);
}

TEST_CASE("observables") {
    const auto basis = std::make_shared<SectorBasis>(SectorBasis::fixed(3, 2));
    StateVector s{basis, Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(basis->dim()))};
    s.amp(basis->index(0b011)) = std::sqrt(0.25);
    s.amp(basis->index(0b110)) = std::sqrt(0.75);
    CHECK(two_body_correlator(s, 0, 1) == doctest::Approx(0.25));
    CHECK(two_body_correlator(s, 1, 2) == doctest::Approx(0.75));
    CHECK(two_body_correlator(s, 0, 2) == doctest::Approx(0.0));
    bool flagged = false;
    CHECK(two_body_correlator(s, 1, 1, &flagged) == 0.0);
    CHECK(flagged);

    const auto one = SectorBasis::fixed(3, 1);
    CHECK_THROWS(embed(s, one));
    const auto full = SectorBasis::full(3);
    CHECK(embed(s, full).norm() == doctest::Approx(1.0));

    EvolutionResult r;
    init_result(r, {0.0}, 3, {});
    record_observables(r, 0, s.amp, *basis, {0.0, 1.0, 2.0});
    CHECK(r.com_x(0) == doctest::Approx(0.25 * 0.0 + 1.0 * 1.0 + 0.75 * 2.0));
    const auto com = region_com(r, {0.0, 1.0, 2.0}, {1, 2});
    CHECK(com[0] == doctest::Approx((1.0 + 1.5) / 1.75));
    CHECK(std::isnan(region_com(r, {0.0, 1.0, 2.0}, {})[0]));
    CHECK(evolution_csv(r).rfind("time,", 0) == 0);
}
