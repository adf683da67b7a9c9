// acceptance.cpp — the fifteen acceptance checks, one PASS/FAIL line each, fixed tolerances
#include "generators.hpp"
#include "rydflux/effective.hpp"
#include "rydflux/linalg.hpp"
#include "rydflux/scenarios.hpp"
#include "rydflux/spectra.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace rydflux;
namespace sc = rydflux::scenarios;
using nlohmann::json;

namespace {

// Pinned tolerances.
constexpr double transfer_peak_min = 0.99;
constexpr double transfer_time_tol = 0.02;
constexpr double crosstalk_scaling_factor = 3.0;
constexpr double crosstalk_pointwise = 0.05;
constexpr double crosstalk_pointwise_from = 20.0;       // separation / |J|
constexpr double crosstalk_decade_lo = 5.0, crosstalk_decade_hi = 50.0;
constexpr double chiral_l1_max = 0.1;
constexpr double flux_zero_tol = 1e-12;
constexpr double gvv_rel_tol = 1e-10;
constexpr double ladder_l1_max = 0.15;
constexpr double ladder_min_separation = 1.0;
constexpr double doublon_gap_over_j = 60.0;
constexpr double doublon_band_tol = 0.10;              // fraction of the COM bandwidth
constexpr double convolution_tol = 1e-9;
constexpr double transmission_min = 0.9;
constexpr double bound_fraction_min = 0.9;
constexpr double z_max = 3.0;
constexpr double global_over_single_min = 10.0;
constexpr double per_atom_over_period_max = 1.0;
constexpr double dfs_tol = 1e-12;
constexpr double ramsey_tol = 0.2;
constexpr double retained_min = 0.5;
constexpr double balance_tol = 1e-9;
constexpr double saturation_tol = 0.02;

struct Check {
    bool pass{true};
    std::ostringstream detail;
    void require(bool ok, const std::string& what) {
        if (!ok) pass = false;
        detail << (detail.tellp() > 0 ? "; " : "") << what << (ok ? "" : " [x]");
    }
};

std::string num(double v) {
    std::ostringstream os;
    os << std::setprecision(4) << v;
    return os.str();
}

struct Timed {
    json summary;
    double seconds{0.0};
};

Timed run_scenario(const std::string& name, const std::vector<std::string>& overrides = {}) {
    json c = {{"scenario", name}};
    for (const auto& o : overrides) sc::apply_override(c, o);
    const auto spec = sc::resolve(c);
    const auto t0 = std::chrono::steady_clock::now();
    const auto out = sc::run(spec);
    return {out.summary, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()};
}

void runtime(Check& c, double seconds, double limit) { c.require(seconds < limit, "runtime " + num(seconds) + " s < " + num(limit) + " s"); }

void c1(Check& c) {
    const auto r = run_scenario("two_atom_transfer");
    const auto& m = r.summary["main"];
    const double peak = m["peak_transfer"], tp = m["peak_time_us"], tt = m["transfer_time_us"];
    c.require(std::abs(m["j_over_omega"].get<double>() - 0.2) < 1e-9, "|J|/Omega = " + num(m["j_over_omega"]));
    c.require(peak >= transfer_peak_min, "peak transfer " + num(peak) + " >= " + num(transfer_peak_min));
    c.require(std::abs(tp / tt - 1.0) <= transfer_time_tol, "peak at " + num(tp / tt) + " x pi/(2|J|)");
    runtime(c, r.seconds, 1.0);
}

void c2(Check& c) {
    const auto r = run_scenario("crosstalk_sweep");
    double lo = 1e300, hi = 0.0, worst_pointwise = 0.0;
    for (const auto& row : r.summary["sweep"]) {
        const double sep = row["separation_over_j"];
        if (sep >= crosstalk_decade_lo && sep <= crosstalk_decade_hi) {
            lo = std::min(lo, row["contamination_times_sep2"].get<double>());
            hi = std::max(hi, row["contamination_times_sep2"].get<double>());
        }
        if (sep >= crosstalk_pointwise_from) worst_pointwise = std::max(worst_pointwise, row["max_population_deviation"].get<double>());
    }
    c.require(hi / lo <= crosstalk_scaling_factor, "contamination x (delta/J)^2 spread " + num(hi / lo) + " over delta/J in [5, 50]");
    c.require(worst_pointwise <= crosstalk_pointwise, "max pointwise deviation at delta >= 20|J|: " + num(worst_pointwise));
    runtime(c, r.seconds, 60.0);
}

void c3(Check& c) {
    const auto r = run_scenario("three_atom_chiral");
    const auto& f = r.summary["forward"];
    const auto& b = r.summary["reversed"];
    c.require(f["mean_l1"].get<double>() <= chiral_l1_max, "time-averaged L1 " + num(f["mean_l1"]));
    c.require(f["peak_order_exact"] == json({1, 2}) && f["peak_order_effective"] == json({1, 2}), "order 1->2->3");
    c.require(b["peak_order_exact"] == json({2, 1}) && b["peak_order_effective"] == json({2, 1}), "reversed phases reverse the order");
    c.require(b["mean_l1"].get<double>() <= chiral_l1_max, "reversed L1 " + num(b["mean_l1"]));
    runtime(c, r.seconds, 60.0);
}

void c4(Check& c) {
    testing::Gen gen(2024);
    const auto law = testing::reference_law();
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        const int n = gen.integer(3, 7);
        const auto g = gen.geometry(n, 3.5, 12.0);
        const auto m = build_effective_model(gen.monochromatic(n), law, g);
        std::vector<int> loop;
        for (int i = 0; i < n; ++i) loop.push_back(i);
        std::shuffle(loop.begin(), loop.end(), gen.rng);
        loop.resize(static_cast<std::size_t>(gen.integer(3, n)));
        worst = std::max(worst, std::abs(plaquette_flux(m, loop).wrapped));
    }
    c.require(worst <= flux_zero_tol, "max |flux| over 100 configurations " + num(worst));
}

void c5(Check& c) {
    const auto r = run_scenario("floquet_oracle");
    const int compared = r.summary["compared"], within = r.summary["within_bound"], n = r.summary["configs"];
    c.require(n == 50 && compared == n, std::to_string(compared) + "/" + std::to_string(n) + " compared");
    c.require(within == compared, std::to_string(within) + " within C(Omega/Delta)^4|Delta|, C = 4 (worst " +
                                      num(r.summary["worst_bound_constant"]) + ")");
    c.require(r.summary["worst_gvv_rel_error"].get<double>() <= gvv_rel_tol, "GVV relative error " + num(r.summary["worst_gvv_rel_error"]));
    c.require(r.summary["dimer_rel_error"].get<double>() <= gvv_rel_tol, "dimer block error " + num(r.summary["dimer_rel_error"]));
    runtime(c, r.seconds, 300.0);
}

void c6(Check& c) {
    const auto r = run_scenario("hh_ladder_collision");
    const auto& s = r.summary;
    c.require(s["dimension"] == 65536, "dimension " + s["dimension"].dump());
    c.require(s["exact_min_separation"].get<double>() > ladder_min_separation, "exact min COM separation " + num(s["exact_min_separation"]));
    c.require(s["effective_min_separation"].get<double>() > ladder_min_separation, "effective min COM separation " + num(s["effective_min_separation"]));
    c.require(s["mean_l1"].get<double>() <= ladder_l1_max, "time-averaged L1 " + num(s["mean_l1"]));
    runtime(c, r.seconds, 1800.0);
}

void c7(Check& c) {
    const auto t0 = std::chrono::steady_clock::now();
    const double jx = from_mhz(0.5), jy = jx / 0.6;
    const auto hh = chern_numbers(hofstadter_torus(jx, jy, 1, 3));
    c.require(hh.chern == std::vector<int>{-1, 2, -1}, "flux 2pi/3: " + json(hh.chern).dump());
    const auto zero = chern_numbers(hofstadter_torus(jx, jy, 0, 1));
    c.require(zero.chern == std::vector<int>{0}, "flux 0: " + json(zero.chern).dump());
    int sum = 0;
    for (int v : hh.chern) sum += v;
    c.require(sum == 0, "band sum " + std::to_string(sum));
    const auto dm = doublon_com_model(jx, jy, 2 * M_PI / 3, 10 * jx, 10 * jx, 10 * jx);
    const auto [p, q] = flux_fraction(dm.com_flux);
    const auto [pm, qm] = flux_fraction(-2 * M_PI / 3);
    const auto dc = chern_numbers(hofstadter_torus(dm.com_hopping_x, dm.com_hopping_y, p, q));
    const auto ref = chern_numbers(hofstadter_torus(dm.com_hopping_x, dm.com_hopping_y, pm, qm));
    c.require(dc.chern == ref.chern && dc.chern == std::vector<int>{1, -2, 1}, "doublon COM at 4pi/3: " + json(dc.chern).dump());
    runtime(c, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 60.0);
}

void c8(Check& c) {
    const double jx = 1.0, jy = 1.0 / 0.6, phi = 2 * M_PI / 3, u = doublon_gap_over_j * jy;
    CylinderModel m;
    m.lx = 9;
    m.jx = jx;
    m.jy = jy;
    m.flux = phi;
    m.r_max = 8;
    m.v_override[{0, 2}] = u;
    const auto dm = doublon_com_model(jx, jy, phi, u - cylinder_interaction(m, 0, 1), u - cylinder_interaction(m, 1, 2),
                                      u - cylinder_interaction(m, 0, 3));
    c.require(dm.com_flux_raw - 2 * phi == 0.0 && wrap_angle(dm.com_flux - 2 * phi) == 0.0, "Phi' - 2 Phi = 0 mod 2pi");
    CylinderModel com;
    com.lx = m.lx;
    com.jx = dm.com_hopping_x;
    com.jy = dm.com_hopping_y;
    com.flux = dm.com_flux;
    const auto ks = k_grid(24, false);
    const auto s = sweep_spectrum(m, ks, false);
    double worst = 0.0, lo = 1e300, hi = -1e300;
    for (std::size_t q = 0; q < ks.size(); ++q) {
        Eigen::MatrixXcd h = single_particle_bloch(com, ks[q]);
        for (int x = 0; x < m.lx; ++x) {
            const int partners = (x > 0 ? 2 : 0) + (x + 1 < m.lx ? 2 : 0);
            h(x, x) += u + (4 * jy * jy + partners * jx * jx) / u;
        }
        const Eigen::VectorXd ref = linalg::eigh(h, false).values;
        const Eigen::VectorXd& e = s.energies[q];
        lo = std::min(lo, ref.minCoeff());
        hi = std::max(hi, ref.maxCoeff());
        for (int i = 0; i < m.lx; ++i) worst = std::max(worst, std::abs(e(e.size() - m.lx + i) - ref(i)));
    }
    c.require(worst <= doublon_band_tol * (hi - lo), "type-I band vs COM bands at 2Phi: " + num(worst / (hi - lo)) + " of bandwidth");
}

double convolution_error() {
    CylinderModel m;
    m.lx = 9;
    m.jx = 1.0;
    m.jy = 1.0 / 0.6;
    m.flux = 2 * M_PI / 3;
    m.ly = 5;
    m.hard_core = false;
    std::vector<std::pair<double, int>> singles;
    for (int j = 0; j < m.ly; ++j) {
        const Eigen::VectorXd ev = linalg::eigh(single_particle_bloch(m, two_pi * j / m.ly), false).values;
        for (Eigen::Index a = 0; a < ev.size(); ++a) singles.emplace_back(ev(a), j);
    }
    double worst = 0.0;
    for (int kk = 0; kk < m.ly; ++kk) {
        std::vector<double> expect;
        for (std::size_t a = 0; a < singles.size(); ++a)
            for (std::size_t b = a; b < singles.size(); ++b)
                if ((singles[a].second + singles[b].second) % m.ly == kk) expect.push_back(singles[a].first + singles[b].first);
        std::sort(expect.begin(), expect.end());
        const Eigen::VectorXd got = sweep_spectrum(m, {two_pi * kk / m.ly}, false).energies[0];
        if (static_cast<std::size_t>(got.size()) != expect.size()) return 1e300;
        for (std::size_t i = 0; i < expect.size(); ++i) worst = std::max(worst, std::abs(got(static_cast<Eigen::Index>(i)) - expect[i]));
    }
    return worst;
}

void c9(Check& c) {
    const auto r = run_scenario("anisotropic_hh_spectra");
    const auto& s = r.summary;
    const auto& counts = s["state_counts"];
    for (const char* t : {"scattering", "I", "II", "III"})
        c.require(counts.value(t, 0) > 0, std::string(t) + ": " + std::to_string(counts.value(t, 0)));
    c.require(s["type_one_bulk_subbands_over_jx"].size() == 3, "type-I bulk sub-bands " + std::to_string(s["type_one_bulk_subbands_over_jx"].size()));
    const int left = s["type_one_edge_states_in_gaps"]["left"], right = s["type_one_edge_states_in_gaps"]["right"];
    c.require(left > 0 && right > 0, "in-gap edge states left " + std::to_string(left) + ", right " + std::to_string(right));
    const double conv = convolution_error();
    c.require(conv <= convolution_tol, "V = 0 convolution error " + num(conv));
    runtime(c, r.seconds, 600.0);
}

void c10(Check& c) {
    const auto r = run_scenario("edge_transport");
    const auto& s = r.summary;
    const double w1 = s["single"]["final_winding"], w2 = s["doublon"]["final_winding"];
    c.require(w1 * w2 < 0.0, "windings " + num(w1) + " and " + num(w2) + " rad");
    c.require(s["single"]["transmission"].get<double>() >= transmission_min, "in-gap transmission " + num(s["single"]["transmission"]));
    c.require(s["doublon"]["min_bound_fraction"].get<double>() >= bound_fraction_min, "min pair fraction " + num(s["doublon"]["min_bound_fraction"]));
    runtime(c, r.seconds, 600.0);
}

void c11(Check& c) {
    const auto r = run_scenario("phase_noise");
    const auto& s = r.summary;
    c.require(s["single"]["points_beyond_3sigma"] == 0, "single atom vs Lindblad max z " + num(s["single"]["max_z"]));
    const double g = s["modes"]["global"]["damping_over_single"];
    const bool g_undamped = !s["modes"]["global"]["damped"].get<bool>();
    c.require(g_undamped || g >= global_over_single_min, "global damping / single " + (g_undamped ? std::string("inf") : num(g)));
    const bool pa_damped = s["modes"]["per_atom"]["damped"];
    const double pa = s["modes"]["per_atom"]["damping_over_period"];
    c.require(pa_damped && pa < per_atom_over_period_max, "per-atom damping / period " + num(pa));
    c.require(s["sz_heff_commutator"].get<double>() <= dfs_tol, "[S_z, H_eff] " + num(s["sz_heff_commutator"]));
    c.require(s["sz_dissipator_on_sector_state"].get<double>() <= dfs_tol, "L[S_z] rho " + num(s["sz_dissipator_on_sector_state"]));
    runtime(c, r.seconds, 600.0);
}

void c12(Check& c) {
    const auto r = run_scenario("doppler");
    const auto& s = r.summary;
    const double ratio = s["ramsey"]["ratio_to_inverse_sigma"];
    c.require(std::abs(ratio - 1.0) <= ramsey_tol, "Ramsey 1/e time = " + num(ratio) + " / Delta_T");
    c.require(s["chiral"]["window_start_us"].get<double>() >= s["chiral"]["ramsey_decayed_after_us"].get<double>(), "window after Ramsey decay");
    c.require(s["chiral"]["retained_fraction"].get<double>() >= retained_min, "retained contrast " + num(s["chiral"]["retained_fraction"]));
    c.require(std::abs(s["two_site"]["z"].get<double>()) <= z_max, "two-site shift z " + num(s["two_site"]["z"]));
}

void c13(Check& c) {
    const auto r = run_scenario("decay_postselect");
    const auto& s = r.summary;
    c.require(s["success"]["points_beyond_3sigma"] == 0, "success probability max z " + num(s["success"]["max_z"]));
    const double l1 = s["conditional"]["mean_l1"], err = s["conditional"]["mean_stderr"];
    c.require(l1 <= 3.0 * err, "post-selected <x> L1 " + num(l1) + " vs 3 sigma " + num(3 * err));
    c.require(s["unconditional"]["points_beyond_3sigma"] == 0, "unconditional <x> vs exp(-kappa t) max z " + num(s["unconditional"]["max_z"]));
}

void c14(Check& c) {
    const auto b = run_scenario("potential_balance");
    c.require(b.summary["residual_over_delta"].get<double>() < balance_tol, "residual / |Delta| " + num(b.summary["residual_over_delta"]));
    const double before = b.summary["asymmetry_before"], after = b.summary["asymmetry_after"];
    c.require(after < before, "asymmetry " + num(before) + " -> " + num(after));
    const auto h = run_scenario("hopping_vs_spacing");
    c.require(std::abs(h.summary["j1_norm_at_d_min"].get<double>() - 1.0) <= saturation_tol,
              "J / (Omega^2 / 4 Delta) at d_min " + num(h.summary["j1_norm_at_d_min"]));
    c.require(h.summary["nearest_neighbor_dominance_monotone"].get<bool>(), "nearest-neighbor dominance monotone");
}

void c15(Check& c) {
    // Heavy scenarios at reduced size; the code paths are the same.
    const std::vector<std::pair<std::string, std::vector<std::string>>> runs = {
        {"two_atom_transfer", {}},
        {"crosstalk_sweep", {"params.separations_over_j=[5.0,20.0]"}},
        {"three_atom_chiral", {"params.n_times=31"}},
        {"hh_ladder_collision", {"params.duration=0.05", "params.n_times=3"}},
        {"anisotropic_hh_spectra", {"params.n_k=12", "params.check_convergence=false"}},
        {"edge_transport", {"params.single_size=8", "params.doublon_size=6", "params.single_vacancy=5", "params.doublon_vacancy=5",
                            "params.single_duration=1.0", "params.doublon_duration=2.0", "params.n_times=5"}},
        {"phase_noise", {"params.single_runs=20", "params.chiral_runs=2", "params.chiral_periods=2", "params.n_times=21"}},
        {"doppler", {}},
        {"decay_postselect", {}},
        {"potential_balance", {}},
        {"hopping_vs_spacing", {}},
        {"power_budget", {}},
        {"floquet_oracle", {"params.n_configs=6"}}};
    for (const auto& [name, ov] : runs) {
        json cfg = {{"scenario", name}, {"seed", 7}};
        for (const auto& o : ov) sc::apply_override(cfg, o);
        const auto spec = sc::resolve(cfg);
        const auto a = sc::run(spec), b = sc::run(spec);
        c.require(a.files == b.files && a.summary.dump() == b.summary.dump(), name);
    }
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria = {
        {"two-atom transfer at |J| = 0.2 Omega", c1},
        {"crosstalk suppression", c2},
        {"three-atom chiral motion", c3},
        {"zero flux for monochromatic dressing", c4},
        {"Floquet / van Vleck oracle", c5},
        {"exact 4x4 ladder collision", c6},
        {"Chern numbers", c7},
        {"doublon flux doubling", c8},
        {"two-body spectra", c9},
        {"edge transport", c10},
        {"phase noise", c11},
        {"Doppler broadening", c12},
        {"decay and post-selection", c13},
        {"tunability", c14},
        {"determinism", c15}};
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Check c;
        try {
            criteria[i].second(c);
        } catch (const std::exception& e) {
            c.require(false, std::string("exception: ") + e.what());
        }
        if (!c.pass) ++failed;
        std::cout << (c.pass ? "PASS" : "FAIL") << "  " << std::setw(2) << i + 1 << "  " << criteria[i].first << ": "
                  << c.detail.str() << std::endl;
    }
    std::cout << criteria.size() - failed << "/" << criteria.size() << " criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
