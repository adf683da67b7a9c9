// test_noise.cpp — noise sampling, Lindblad integration, trajectories and the decoherence-free subspace
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "generators.hpp"
#include "rydflux/noise.hpp"

#include <cmath>
#include <set>

using namespace rydflux;
using rydflux::testing::Gen;

namespace {

std::vector<double> grid(double t_end, int n) {
    std::vector<double> t;
    for (int i = 0; i < n; ++i) t.push_back(t_end * i / (n - 1));
    return t;
}

DressingConfig triangle_config() {
    DressingConfig cfg;
    cfg.colors = {ColorField{"A", from_mhz(120.0), {{0, from_mhz(10.0)}, {1, from_mhz(10.0)}}},
                  ColorField{"B", from_mhz(140.0), {{1, from_mhz(10.0)}, {2, from_mhz(10.0)}}},
                  ColorField{"C", from_mhz(160.0), {{2, from_mhz(10.0)}, {0, from_mhz(10.0)}}}};
    return cfg;
}

}  // namespace

TEST_CASE("derived seeds are deterministic and distinct") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(derive_seed(7, i));
    CHECK(seen.size() == 1000);
    CHECK(derive_seed(7, 3) == derive_seed(7, 3));
    CHECK(derive_seed(7, 3) != derive_seed(8, 3));
}

TEST_CASE("phase paths: count per mode and Var phi(t) = 4 gamma t") {
    const auto cfg = triangle_config();
    CHECK(sample_phase_noise(1.0, NoiseSpec::Mode::global, cfg, 0.01, 10, 1).paths.size() == 1);
    CHECK(sample_phase_noise(1.0, NoiseSpec::Mode::per_color, cfg, 0.01, 10, 1).paths.size() == 3);
    CHECK(sample_phase_noise(1.0, NoiseSpec::Mode::per_atom, cfg, 0.01, 10, 1).paths.size() == 6);

    const double gamma = 0.5, dt = 0.01;
    const std::size_t steps = 200;
    double sum = 0.0, sum2 = 0.0;
    const int n = 4000;
    for (int k = 0; k < n; ++k) {
        const auto r = sample_phase_noise(gamma, NoiseSpec::Mode::global, cfg, dt, steps, derive_seed(5, k));
        const double phi = r.phase(0, 0, dt * steps);
        sum += phi;
        sum2 += phi * phi;
    }
    const double var = sum2 / n - std::pow(sum / n, 2);
    const double expect = 4.0 * gamma * dt * steps;
    // Sample variance of a Gaussian has relative standard error sqrt(2/n).
    CHECK(std::abs(var - expect) < 5.0 * std::sqrt(2.0 / n) * expect);
}

TEST_CASE("Doppler offsets have the requested spread") {
    const auto d = sample_doppler(2.0, 20000, 3);
    double s = 0.0, s2 = 0.0;
    for (double x : d) {
        s += x;
        s2 += x * x;
    }
    CHECK(std::abs(s / d.size()) < 5.0 * 2.0 / std::sqrt(20000.0));
    CHECK(std::sqrt(s2 / d.size()) == doctest::Approx(2.0).epsilon(0.03));
    CHECK(sample_doppler(2.0, 5, 9) == sample_doppler(2.0, 5, 9));
}

TEST_CASE("Ramsey contrast follows the Gaussian envelope") {
    const double sigma = 1.3;
    const auto r = ramsey(sigma, grid(3.0, 31), 4000, 11);
    CHECK(r.analytic_one_over_e_time == doctest::Approx(std::sqrt(2.0) / sigma));
    for (std::size_t k = 0; k < r.times.size(); ++k)
        CHECK(std::abs(r.coherence[k] - r.analytic[k]) < 5.0 * r.stderr_[k] + 1e-12);
    CHECK(r.one_over_e_time == doctest::Approx(r.analytic_one_over_e_time).epsilon(0.05));
}

TEST_CASE("collective S_z and the decoherence-free subspace") {
    Gen gen(41);
    const int n = 4;
    const auto basis = SectorBasis::full(n);
    const auto sz = collective_sz(basis);
    for (std::size_t a = 0; a < basis.dim(); ++a)
        CHECK(sz(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(a)).real() == 2 * popcount(basis.state(a)) - n);

    const auto g = gen.geometry(n, 3.5, 12.0);
    const auto m = build_effective_model(gen.config(n, 3), rydflux::testing::reference_law(), g);
    const Eigen::MatrixXcd h(effective_hamiltonian(m, basis));
    CHECK((h * sz - sz * h).cwiseAbs().maxCoeff() < 1e-14);

    // Any pure state inside one excitation sector is annihilated by D[S_z].
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(basis.dim()));
    for (std::size_t a = 0; a < basis.dim(); ++a)
        if (popcount(basis.state(a)) == 2) psi(static_cast<Eigen::Index>(a)) = cplx(gen.uniform(-1, 1), gen.uniform(-1, 1));
    psi.normalize();
    const Eigen::MatrixXcd rho = psi * psi.adjoint();
    CHECK(dissipator({{0.7, sz, "sz"}}, rho).cwiseAbs().maxCoeff() < 1e-14);
    // A superposition across sectors is not protected.
    Eigen::VectorXcd mixed = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(basis.dim()));
    mixed(0) = mixed(1) = std::sqrt(0.5);
    CHECK(dissipator({{0.7, sz, "sz"}}, mixed * mixed.adjoint()).cwiseAbs().maxCoeff() > 0.1);
}

TEST_CASE("master equation: dephasing and decay of a single atom") {
    const auto basis = SectorBasis::full(1);
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Constant(2, 2, 0.5);
    const auto h = static_hamiltonian(Eigen::MatrixXcd::Zero(2, 2));
    MasterOptions opt;
    opt.store_snapshots = true;
    opt.max_step = 1e-3;
    const auto times = grid(2.0, 11);
    const double gamma = 0.3, kappa = 0.8;
    const auto deph = master_equation_evolve(h, 0.0, basis, rho, local_dephasing(basis, gamma), times, opt);
    for (std::size_t k = 0; k < times.size(); ++k)
        CHECK(std::abs(deph.snapshots[k](0, 1)) == doctest::Approx(0.5 * std::exp(-2 * gamma * times[k])).epsilon(1e-9));
    CHECK(deph.max_trace_error < 1e-12);

    rho.setZero();
    rho(1, 1) = 1.0;
    const auto dec = master_equation_evolve(h, 0.0, basis, rho, decay_operators(basis, kappa), times, opt);
    for (std::size_t k = 0; k < times.size(); ++k)
        CHECK(dec.populations(static_cast<Eigen::Index>(k), 0) == doctest::Approx(std::exp(-kappa * times[k])).epsilon(1e-9));
    CHECK(dec.min_eigenvalue > -1e-12);
}

TEST_CASE("trajectory ensembles are reproducible and validated") {
    TrajectorySpec spec;
    spec.kind = TrajectorySpec::Kind::effective;
    spec.geometry.sites = {{0, 0}, {5, 0}, {2.5, 4.33}};
    spec.config = triangle_config();
    spec.law = rydflux::testing::reference_law();
    spec.initial = 0b001;
    spec.times = grid(1.0, 6);
    spec.noise.decay_rate = 0.5;
    spec.noise.seed = 99;
    const auto a = trajectory_ensemble(spec, 20, 1);
    const auto b = trajectory_ensemble(spec, 20, 2);
    CHECK((a.mean_populations - b.mean_populations).cwiseAbs().maxCoeff() == 0.0);
    for (std::size_t r = 0; r < a.runs.size(); ++r) CHECK(a.runs[r].seed == derive_seed(99, r));

    const auto ps = post_select(a, 1, [](Config c) { return static_cast<double>(popcount(c)); });
    for (std::size_t k = 0; k < ps.times.size(); ++k) {
        CHECK(ps.success_probability[k] >= 0.0);
        CHECK(ps.success_probability[k] <= 1.0);
        if (ps.successes[k] > 0) CHECK(ps.conditional_mean[k] == doctest::Approx(1.0));
    }
    CHECK(ps.success_probability[0] == 1.0);

    spec.noise.phase_noise_rate = 0.1;
    CHECK_THROWS_AS(trajectory_ensemble(spec, 2), std::invalid_argument);
}

TEST_CASE("Doppler scaling diagnostics") {
    const auto d = doppler_scaling_diagnostics(2.0, 0.5);
    CHECK(d.eigenvalue == doctest::Approx(std::sqrt(4.25)));
    CHECK(d.gamma_eff == doctest::Approx(0.125));
    CHECK(d.localization_length == doctest::Approx(16.0));
    CHECK(d.coherence_time == doctest::Approx(8.0));
    CHECK(std::isinf(doppler_scaling_diagnostics(2.0, 0.0).localization_length));
}

TEST_CASE("envelope damping time") {
    std::vector<double> t, decaying, steady;
    for (int k = 0; k <= 4000; ++k) {
        t.push_back(k * 0.005);
        decaying.push_back(std::exp(-t.back() / 6.0) * std::cos(2 * M_PI * t.back()));
        steady.push_back(std::cos(2 * M_PI * t.back()));
    }
    CHECK(envelope_damping_time(t, decaying, 1.0) == doctest::Approx(6.0).epsilon(0.05));
    CHECK(std::isinf(envelope_damping_time(t, steady, 1.0)));

    // Resolved windows are unaffected by the error bars.
    const std::vector<double> tiny(t.size(), 1e-6);
    CHECK(envelope_damping_time(t, decaying, 1.0, tiny) == envelope_damping_time(t, decaying, 1.0));

    // Fast decay buried in a noise floor: the plain fit reads the floor as a slow envelope.
    std::vector<double> buried;
    for (double x : t) buried.push_back(std::exp(-x / 0.3) * std::cos(2 * M_PI * x) + 0.02 * std::sin(37.0 * x));
    const std::vector<double> err(t.size(), 0.01);
    CHECK(envelope_damping_time(t, buried, 1.0) > 1.0);
    const double bound = envelope_damping_time(t, buried, 1.0, err);
    CHECK(bound < 1.0);
    CHECK(bound >= 0.3);
    CHECK(std::isnan(envelope_damping_time(t, buried, 1.0, std::vector<double>(t.size(), 1.0))));
}
