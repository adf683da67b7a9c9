// scenarios_noise.cpp — phase noise, Doppler disorder and decay with post-selection
#include "scenario_impl.hpp"

#include "rydflux/linalg.hpp"
#include "rydflux/noise.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rydflux::scenarios::detail {

namespace {

// Triangle used by all noise studies: three colors at their default frequencies, flux pi/2.
Setup noise_triangle() {
    const std::vector<double> det = {120.0, 140.0, 160.0}, rabi = {10.0, 10.9, 11.7};
    const double c6 = reference_c6();
    const double r = spacing_for(
        equal_hopping_interaction(from_mhz(det[0]), from_mhz(rabi[0]), from_mhz(det[1]), from_mhz(rabi[1])), c6);
    return three_atom(det, rabi, r, std::numbers::pi / 2, c6);
}

std::vector<double> column(const Eigen::MatrixXd& m, Eigen::Index c) {
    std::vector<double> v(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index t = 0; t < m.rows(); ++t) v[static_cast<std::size_t>(t)] = m(t, c);
    return v;
}

// Largest |a - b| / err; points with zero error count only if they differ beyond 1e-9.
struct ZScore {
    double max_z{0.0};
    int beyond_3sigma{0};
};
// resolution: smallest meaningful standard error (observable range / runs); a sample whose outcomes all coincide
// has zero spread but is still only known to that resolution.
ZScore zscore(const std::vector<double>& a, const std::vector<double>& b, const std::vector<double>& err,
              double resolution = 0.0) {
    ZScore z;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = std::abs(a[k] - b[k]);
        const double e = std::max(err[k], resolution);
        if (e > 0.0) {
            z.max_z = std::max(z.max_z, d / e);
            if (d > 3.0 * e) ++z.beyond_3sigma;
        } else if (d > 1e-9) {
            z.max_z = std::numeric_limits<double>::infinity();
            ++z.beyond_3sigma;
        }
    }
    return z;
}

double finite_or(double v, double fallback) { return std::isfinite(v) ? v : fallback; }

}  // namespace

ScenarioOutput phase_noise(const RunSpec& s) {
    const double gamma = positive(s, "gamma");
    const int nt = integer(s, "n_times");
    // The envelope fit needs two complete periods.
    if (num(s, "chiral_periods") < 2.0) throw ConfigError("params.chiral_periods: must be at least 2");
    if (num(s, "single_duration") * std::hypot(num(s, "single_omega"), num(s, "single_delta")) < 2.0)
        throw ConfigError("params.single_duration: must cover at least two Rabi periods");
    ScenarioOutput out;

    // Single atom against the master equation.
    const double om = from_mhz(positive(s, "single_omega")), de = from_mhz(num(s, "single_delta"));
    TrajectorySpec one;
    one.kind = TrajectorySpec::Kind::full;
    one.geometry.sites = {{0.0, 0.0}};
    one.config.colors = {ColorField{"A", de, {{0, om}}}};
    one.times = linspace(0.0, positive(s, "single_duration"), nt);
    one.noise.phase_noise_rate = gamma;
    one.noise.seed = derive_seed(s.seed, 11);
    one.initial = 0;
    const auto ens = trajectory_ensemble(one, integer(s, "single_runs"), s.jobs);
    auto basis1 = std::make_shared<SectorBasis>(SectorBasis::full(1));
    double bound = 0.0;
    const auto h1 = full_hamiltonian(one.geometry, one.config, one.law, *basis1, &bound);
    Eigen::MatrixXcd rho0 = Eigen::MatrixXcd::Zero(2, 2);
    rho0(0, 0) = 1.0;
    const auto lind = master_equation_evolve(h1, bound, *basis1, rho0, {JumpOperator{gamma, collective_sz(*basis1), "S_z"}}, one.times);
    const auto mc = column(ens.mean_populations, 0), mce = column(ens.stderr_populations, 0), lp = column(lind.populations, 0);
    const auto z1 = zscore(mc, lp, mce, 1.0 / integer(s, "single_runs"));
    const double rabi_period = two_pi / std::hypot(om, de);
    const double tau_single = envelope_damping_time(one.times, lp, rabi_period);
    {
        std::vector<std::vector<double>> rows;
        for (std::size_t k = 0; k < one.times.size(); ++k) rows.push_back({one.times[k], mc[k], mce[k], lp[k]});
        out.files["single_atom.csv"] = table_csv({"time", "P_r_mean", "P_r_stderr", "P_r_lindblad"}, rows);
    }

    // Three-atom chiral motion under each noise mode.
    const Setup tri = noise_triangle();
    const auto model = build_effective_model(tri.config, tri.law, tri.geometry);
    const double period = chiral_period(model);
    const auto times = linspace(0.0, positive(s, "chiral_periods") * period, nt);
    nlohmann::json modes;
    std::vector<std::vector<double>> rows(times.size());
    for (std::size_t k = 0; k < times.size(); ++k) rows[k] = {times[k]};
    std::vector<std::string> header = {"time"};
    const NoiseSpec::Mode list_modes[] = {NoiseSpec::Mode::global, NoiseSpec::Mode::per_color, NoiseSpec::Mode::per_atom};
    std::uint64_t stream = 20;
    for (auto mode : list_modes) {
        TrajectorySpec sp;
        sp.kind = TrajectorySpec::Kind::full;
        sp.geometry = tri.geometry;
        sp.config = tri.config;
        sp.law = tri.law;
        sp.initial = 1;
        sp.times = times;
        sp.noise.phase_noise_rate = gamma;
        sp.noise.mode = mode;
        sp.noise.seed = derive_seed(s.seed, stream++);
        const auto e = trajectory_ensemble(sp, integer(s, "chiral_runs"), s.jobs);
        const auto p0 = column(e.mean_populations, 0);
        const double tau = envelope_damping_time(times, p0, period, column(e.stderr_populations, 0));
        for (std::size_t k = 0; k < times.size(); ++k)
            for (int i = 0; i < 3; ++i) rows[k].push_back(e.mean_populations(static_cast<Eigen::Index>(k), i));
        for (int i = 0; i < 3; ++i) header.push_back(to_string(mode) + "_P" + std::to_string(i));
        modes[to_string(mode)] = {{"damping_time_us", finite_or(tau, -1.0)},
                                  {"resolved", !std::isnan(tau)},
                                  {"damped", std::isfinite(tau)},
                                  {"damping_over_single", std::isfinite(tau) ? tau / tau_single : -1.0},
                                  {"damping_over_period", std::isfinite(tau) ? tau / period : -1.0}};
    }
    out.files["chiral_modes.csv"] = table_csv(header, rows);

    // Collective dephasing leaves fixed-excitation sectors untouched.
    auto all = std::make_shared<SectorBasis>(SectorBasis::full(3));
    const Eigen::MatrixXcd heff = Eigen::MatrixXcd(effective_hamiltonian(model, *all));
    const Eigen::MatrixXcd sz = collective_sz(*all);
    const double commutator = (sz * heff - heff * sz).cwiseAbs().maxCoeff();
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(all->dim()));
    psi(all->index(1)) = std::sqrt(0.5);
    psi(all->index(2)) = cplx(0.0, std::sqrt(0.3));
    psi(all->index(4)) = std::sqrt(0.2);
    const Eigen::MatrixXcd rho = psi * psi.adjoint();
    const double dfs = dissipator({JumpOperator{gamma, sz, "S_z"}}, rho).cwiseAbs().maxCoeff();

    out.summary = {{"single", {{"max_z", finite_or(z1.max_z, 1e300)},
                               {"points_beyond_3sigma", z1.beyond_3sigma},
                               {"points", static_cast<int>(mc.size())},
                               {"damping_time_us", finite_or(tau_single, -1.0)},
                               {"lindblad_trace_error", lind.max_trace_error}}},
                   {"chiral_period_us", period},
                   {"modes", modes},
                   {"sz_heff_commutator", commutator},
                   {"sz_dissipator_on_sector_state", dfs}};
    return out;
}

ScenarioOutput doppler(const RunSpec& s) {
    const double sigma = from_mhz(positive(s, "sigma"));
    const int nt = integer(s, "n_times");
    ScenarioOutput out;

    const auto rt = linspace(0.0, positive(s, "ramsey_duration"), nt);
    const auto ram = ramsey(sigma, rt, integer(s, "ramsey_runs"), derive_seed(s.seed, 31));
    {
        std::vector<std::vector<double>> rows;
        for (std::size_t k = 0; k < rt.size(); ++k) rows.push_back({rt[k], ram.coherence[k], ram.stderr_[k], ram.analytic[k]});
        out.files["ramsey.csv"] = table_csv({"time", "coherence", "stderr", "analytic"}, rows);
    }

    const Setup tri = noise_triangle();
    const auto model = build_effective_model(tri.config, tri.law, tri.geometry);
    const double period = chiral_period(model);
    const auto times = linspace(0.0, positive(s, "chiral_duration"), nt);
    TrajectorySpec sp;
    sp.kind = TrajectorySpec::Kind::effective;
    sp.geometry = tri.geometry;
    sp.config = tri.config;
    sp.law = tri.law;
    sp.initial = 1;
    sp.times = times;
    sp.noise.doppler_sigma = sigma;
    sp.noise.seed = derive_seed(s.seed, 32);
    const auto noisy = trajectory_ensemble(sp, integer(s, "chiral_runs"), s.jobs);
    sp.noise.doppler_sigma = 0.0;
    const auto clean = trajectory_ensemble(sp, 1, 1);

    // Ramsey coherence has decayed below 5% after sqrt(2 ln 20) / sigma.
    const double t_decayed = std::sqrt(2.0 * std::log(20.0)) / sigma;
    const double w0 = std::max(t_decayed, times.back() - period);
    auto contrast = [&](const Eigen::MatrixXd& p) {
        double lo = 1.0, hi = 0.0;
        for (std::size_t k = 0; k < times.size(); ++k)
            if (times[k] >= w0) {
                lo = std::min(lo, p(static_cast<Eigen::Index>(k), 0));
                hi = std::max(hi, p(static_cast<Eigen::Index>(k), 0));
            }
        return hi - lo;
    };
    const double cn = contrast(noisy.mean_populations), cc = contrast(clean.mean_populations);
    {
        std::vector<std::vector<double>> rows;
        for (std::size_t k = 0; k < times.size(); ++k) {
            const auto t = static_cast<Eigen::Index>(k);
            rows.push_back({times[k], noisy.mean_populations(t, 0), noisy.mean_populations(t, 1), noisy.mean_populations(t, 2),
                            clean.mean_populations(t, 0), clean.mean_populations(t, 1), clean.mean_populations(t, 2)});
        }
        out.files["chiral.csv"] = table_csv({"time", "P0", "P1", "P2", "P0_clean", "P1_clean", "P2_clean"}, rows);
    }

    // Two sites with quenched offsets s1, s2: splitting half-width sqrt(J^2 + delta^2), delta = (s1 - s2) / 2.
    const double j = std::abs(model.hopping(1, 0));
    const int ns = integer(s, "two_site_samples");
    std::vector<double> shifts = sample_doppler(sigma, 2 * ns, derive_seed(s.seed, 33));
    double sum = 0.0, sum2 = 0.0;
    for (int k = 0; k < ns; ++k) {
        const double d = 0.5 * (shifts[static_cast<std::size_t>(2 * k)] - shifts[static_cast<std::size_t>(2 * k + 1)]);
        const double e = std::sqrt(j * j + d * d);
        sum += e;
        sum2 += e * e;
    }
    const double mean = sum / ns, err = std::sqrt(std::max(0.0, sum2 / ns - mean * mean) / (ns - 1));
    const double d2 = 0.5 * sigma * sigma, d4 = 0.75 * std::pow(sigma, 4);
    const double expansion = j + d2 / (2.0 * j) - d4 / (8.0 * std::pow(j, 3));
    const auto diag = doppler_scaling_diagnostics(j, sigma);

    out.summary = {{"ramsey", {{"one_over_e_time_us", ram.one_over_e_time},
                               {"analytic_one_over_e_time_us", ram.analytic_one_over_e_time},
                               {"inverse_sigma_us", 1.0 / sigma},
                               {"ratio_to_inverse_sigma", ram.one_over_e_time * sigma}}},
                   {"chiral", {{"period_us", period},
                               {"ramsey_decayed_after_us", t_decayed},
                               {"window_start_us", w0},
                               {"contrast", cn},
                               {"contrast_clean", cc},
                               {"retained_fraction", cc > 0.0 ? cn / cc : 0.0}}},
                   {"two_site", {{"j_mhz", to_mhz(j)},
                                 {"mean_half_splitting", mean},
                                 {"stderr", err},
                                 {"expansion", expansion},
                                 {"z", std::abs(mean - expansion) / err}}},
                   {"diagnostics", {{"gamma_eff", diag.gamma_eff},
                                    {"localization_length", diag.localization_length},
                                    {"coherence_time_us", diag.coherence_time}}}};
    return out;
}

ScenarioOutput decay_postselect(const RunSpec& s) {
    const double kappa = positive(s, "kappa");
    const Setup tri = noise_triangle();
    const auto times = linspace(0.0, positive(s, "kappa_t_max") / kappa, integer(s, "n_times"));
    std::vector<double> x;
    for (const auto& p : tri.geometry.sites) x.push_back(p.x);
    TrajectorySpec sp;
    sp.kind = TrajectorySpec::Kind::effective;
    sp.geometry = tri.geometry;
    sp.config = tri.config;
    sp.law = tri.law;
    sp.initial = 2;   // off-center atom so <x> oscillates
    sp.times = times;
    sp.x_positions = x;
    sp.noise.decay_rate = kappa;
    sp.noise.seed = derive_seed(s.seed, 41);
    const auto ens = trajectory_ensemble(sp, integer(s, "runs"), s.jobs);
    const auto observable = [&](Config c) {
        double v = 0.0;
        for (int i = 0; i < 3; ++i)
            if (c >> i & 1ULL) v += x[static_cast<std::size_t>(i)];
        return v;
    };
    const auto ps = post_select(ens, 1, observable);

    const auto model = build_effective_model(tri.config, tri.law, tri.geometry);
    auto b1 = std::make_shared<SectorBasis>(SectorBasis::fixed(3, 1));
    EffectiveOptions opt;
    opt.x_positions = x;
    const auto free = evolve_effective(model, StateVector::product(b1, sp.initial), times, 1, opt);

    std::vector<double> expected(times.size()), free_x(times.size()), damped(times.size());
    for (std::size_t k = 0; k < times.size(); ++k) {
        expected[k] = std::exp(-kappa * times[k]);
        free_x[k] = free.com_x(static_cast<Eigen::Index>(k));
        damped[k] = expected[k] * free_x[k];
    }
    const double runs = static_cast<double>(integer(s, "runs"));
    double x_range = 0.0;
    for (double v : x) x_range = std::max(x_range, std::abs(v));
    const auto zs = zscore(ps.success_probability, expected, ps.success_stderr, 1.0 / runs);
    double l1 = 0.0, mean_err = 0.0;
    int counted = 0;
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (ps.successes[k] < 2) continue;
        l1 += std::abs(ps.conditional_mean[k] - free_x[k]);
        mean_err += ps.conditional_stderr[k];
        ++counted;
    }
    l1 /= std::max(counted, 1);
    mean_err /= std::max(counted, 1);
    const auto zu = zscore(ps.unconditional_mean, damped, ps.unconditional_stderr, x_range / runs);

    std::vector<std::vector<double>> rows;
    for (std::size_t k = 0; k < times.size(); ++k)
        rows.push_back({times[k], ps.success_probability[k], ps.success_stderr[k], expected[k], ps.conditional_mean[k],
                        ps.conditional_stderr[k], ps.unconditional_mean[k], ps.unconditional_stderr[k], free_x[k]});
    ScenarioOutput out;
    out.files["postselect.csv"] = table_csv({"time", "success", "success_stderr", "exp_minus_kappa_t", "x_conditional",
                                             "x_conditional_stderr", "x_unconditional", "x_unconditional_stderr", "x_decay_free"},
                                            rows);
    out.files["runs.csv"] = run_log_csv(ens);
    out.summary = {{"success", {{"max_z", finite_or(zs.max_z, 1e300)}, {"points_beyond_3sigma", zs.beyond_3sigma}}},
                   {"conditional", {{"mean_l1", l1}, {"mean_stderr", mean_err}, {"times_used", counted}}},
                   {"unconditional", {{"max_z", finite_or(zu.max_z, 1e300)}, {"points_beyond_3sigma", zu.beyond_3sigma}}},
                   {"points", static_cast<int>(times.size())}};
    return out;
}

}  // namespace rydflux::scenarios::detail
