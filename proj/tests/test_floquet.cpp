// test_floquet.cpp — elementary frequency, Fourier blocks, extended-space matrix and van Vleck blocks
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "generators.hpp"
#include "rydflux/effective.hpp"
#include "rydflux/floquet.hpp"

#include <cmath>

using namespace rydflux;
using rydflux::testing::Gen;

namespace {

int site_of(const FloquetMatrix& f, long idx) { return __builtin_ctzll(f.basis->state(static_cast<std::size_t>(f.physical(idx)))); }

double pi1_weight(const FloquetMatrix& f, const Eigen::VectorXcd& v) {
    double w = 0.0;
    for (long i = 0; i < f.dim(); ++i)
        if (popcount(f.basis->state(static_cast<std::size_t>(f.physical(i)))) == 1) w += std::norm(v(i));
    return w;
}

}  // namespace

TEST_CASE("elementary frequency of a commensurate ladder") {
    const auto ef = elementary_frequency({from_mhz(120.0), from_mhz(140.0), from_mhz(160.0)});
    CHECK(ef.omega == doctest::Approx(from_mhz(20.0)).epsilon(1e-12));
    CHECK(ef.harmonics == std::vector<long>{6, 7, 8});
    const auto neg = elementary_frequency({-3.0, 4.5});
    CHECK(neg.omega == doctest::Approx(1.5));
    CHECK(neg.harmonics == std::vector<long>{-2, 3});
    CHECK_THROWS_AS(elementary_frequency({1.0, M_PI}, 1e-12, 1000), std::invalid_argument);
    CHECK_THROWS_AS(elementary_frequency({}), std::invalid_argument);
    CHECK_THROWS_AS(elementary_frequency({1.0, 0.0}), std::invalid_argument);
}

TEST_CASE("property: Fourier blocks satisfy H_{-n} = H_n^dagger") {
    Gen gen(21);
    for (int t = 0; t < 20; ++t) {
        const int n = gen.integer(2, 4);
        const auto g = gen.geometry(n);
        const auto cfg = gen.config(n, gen.integer(1, 3));
        auto basis = std::make_shared<SectorBasis>(SectorBasis::full(n));
        const auto fh = fourier_decompose(cfg, rydflux::testing::reference_law(), g, basis);
        for (const auto& [k, m] : fh.blocks) {
            REQUIRE(fh.blocks.count(-k) == 1);
            const Eigen::MatrixXcd a(m), b(fh.blocks.at(-k));
            CHECK((a - b.adjoint()).cwiseAbs().maxCoeff() < 1e-14);
        }
        for (const auto& c : cfg.colors)
            CHECK(fh.color_harmonic.at(c.label) * fh.omega == doctest::Approx(c.detuning).epsilon(1e-12));
    }
}

TEST_CASE("extended Floquet matrix is Hermitian and truncation is validated") {
    Gen gen(22);
    const auto g = gen.geometry(3);
    const auto cfg = gen.config(3, 2);
    const auto f = build_sector_floquet(cfg, rydflux::testing::reference_law(), g, {0, 1, 2});
    const Eigen::MatrixXcd h(f.h);
    CHECK((h - h.adjoint()).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(f.dim() == static_cast<long>(f.basis->dim()) * (2 * f.n_max + 1));
    CHECK_THROWS_AS(build_sector_floquet(cfg, rydflux::testing::reference_law(), g, {0, 1}, 1), std::invalid_argument);
    CHECK_THROWS_AS(sector_block(f, 1, f.n_max + 1), std::invalid_argument);
}

TEST_CASE("single atom: quasienergy splitting equals the exact dressed-state result") {
    ArrayGeometry g;
    g.sites = {{0, 0}};
    const double delta = from_mhz(100.0), omega = from_mhz(15.0);
    DressingConfig cfg;
    cfg.colors = {ColorField{"A", delta, {{0, omega}}}};
    const auto f = build_sector_floquet(cfg, InteractionLaw{1.0}, g, {0, 1}, 12);
    const auto q = quasienergies(f, -0.5 * delta, 0.5 * delta, 1e-10);
    CHECK(q.checked);
    REQUIRE(q.values.size() == 2);
    const double split = std::abs(q.values(1) - q.values(0));
    const double exact = std::sqrt(delta * delta + omega * omega) - delta;
    CHECK(split == doctest::Approx(exact).epsilon(1e-10));
    // Second order gives Omega^2 / 2 Delta; the residual is fourth order.
    CHECK(std::abs(split - omega * omega / (2 * delta)) < std::pow(omega / delta, 4) * delta);
}

TEST_CASE("property: second-order van Vleck block reproduces the analytic model") {
    Gen gen(23);
    const auto law = rydflux::testing::reference_law();
    for (int t = 0; t < 20; ++t) {
        const int n = gen.integer(2, 3);
        const auto g = gen.geometry(n);
        const auto cfg = gen.config(n, n, 0.05);
        const auto model = build_effective_model(cfg, law, g);
        std::vector<int> sectors;
        for (int k = 0; k <= n; ++k) sectors.push_back(k);
        const auto f = build_sector_floquet(cfg, law, g, sectors);
        const auto block = sector_block(f, 1, 0);
        const auto r = gvv_effective(f, block, 2);
        CHECK(r.h1.cwiseAbs().maxCoeff() == 0.0);
        CHECK(r.anti_hermitian < 1e-12 * r.h2.cwiseAbs().maxCoeff());
        for (std::size_t a = 0; a < block.size(); ++a)
            for (std::size_t b = 0; b < block.size(); ++b) {
                const int i = site_of(f, block[a]), j = site_of(f, block[b]);
                const cplx ref = i == j ? cplx(model.potential(i)) : model.hopping(i, j);
                const cplx got = r.h2(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
                CHECK(std::abs(got - ref) <= 1e-10 * std::max(std::abs(ref), 1e-6));
            }
    }
}

TEST_CASE("property: Pi1 quasienergy splittings agree with the effective model to fourth order") {
    Gen gen(24);
    const auto law = rydflux::testing::reference_law();
    for (int t = 0; t < 10; ++t) {
        const auto g = gen.geometry(2);
        const auto cfg = gen.config(2, 2, gen.uniform(0.02, 0.1));
        const auto model = build_effective_model(cfg, law, g);
        const Eigen::MatrixXcd heff = model.hopping + Eigen::MatrixXcd(model.potential.cast<cplx>().asDiagonal());
        const Eigen::VectorXd ev = linalg::eigh(heff, false).values;
        const auto f = build_sector_floquet(cfg, law, g, {0, 1, 2});
        const double spread = ev.maxCoeff() - ev.minCoeff();
        const auto q = quasienergies(f, ev.minCoeff() - spread - 1.0, ev.maxCoeff() + spread + 1.0);
        std::vector<double> qs;
        for (Eigen::Index c = 0; c < q.values.size(); ++c)
            if (pi1_weight(f, q.vectors.col(c)) > 0.5) qs.push_back(q.values(c));
        REQUIRE(qs.size() == 2);
        double r = 0.0, dmax = 0.0;
        for (const auto& c : cfg.colors)
            for (const auto& [s, om] : c.rabi) {
                r = std::max(r, std::abs(om) / c.detuning);
                dmax = std::max(dmax, c.detuning);
            }
        CHECK(std::abs(std::abs(qs[1] - qs[0]) - (ev(1) - ev(0))) <= 4.0 * std::pow(r, 4) * dmax);
    }
}

TEST_CASE("van Vleck rejects a block that is not quasi-degenerate") {
    ArrayGeometry g;
    g.sites = {{0, 0}, {5, 0}};
    DressingConfig cfg;
    cfg.colors = {ColorField{"A", 10.0, {{0, 1.0}, {1, 1.0}}}};
    const auto f = build_sector_floquet(cfg, InteractionLaw{1e6}, g, {0, 1, 2});
    std::vector<long> mixed = {f.index(0, 0), f.index(0, 1)};
    CHECK_THROWS_AS(gvv_effective(f, mixed, 2), std::invalid_argument);
    CHECK_THROWS_AS(gvv_effective(f, sector_block(f, 1, 0), 4), std::invalid_argument);
}

TEST_CASE("block structure CSV has a header") {
    ArrayGeometry g;
    g.sites = {{0, 0}, {5, 0}};
    DressingConfig cfg;
    cfg.colors = {ColorField{"A", 10.0, {{0, 1.0}, {1, 1.0}}}};
    const auto f = build_sector_floquet(cfg, InteractionLaw{1e6}, g, {0, 1});
    CHECK(block_structure_csv(f).rfind("block_row,block_col,harmonic,nnz\n", 0) == 0);
}
