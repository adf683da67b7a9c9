// scenarios_dynamics.cpp — transfer, crosstalk, chiral plaquette, ladder collision, balancing, hopping scans
#include "scenario_impl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rydflux::scenarios::detail {

namespace {

struct TwoAtom {
    Setup setup;
    double v{0.0};
    double j{0.0};
};

// Two atoms with one color; V solved so the second-order |J| equals j_target.
TwoAtom two_atom(double omega, double delta, double j_target) {
    const double den = omega * omega - 4.0 * delta * j_target;
    if (std::abs(den) < 1e-9 * omega * omega) throw ConfigError("two_atom_transfer: target hopping needs infinite V");
    TwoAtom t;
    t.v = 4.0 * delta * delta * j_target / den;
    t.setup.law.c6 = t.v > 0.0 ? reference_c6() : -reference_c6();
    const double r = spacing_for(t.v, t.setup.law.c6);
    t.setup.geometry.sites = {{0.0, 0.0}, {r, 0.0}};
    ColorField a{"A", delta, {{0, omega}, {1, omega}}};
    t.setup.config.colors = {a};
    const auto m = build_effective_model(t.setup.config, t.setup.law, t.setup.geometry);
    t.j = std::abs(m.hopping(1, 0));
    return t;
}

EvolutionResult exact_run(const Setup& s, Config initial, const std::vector<double>& times) {
    auto basis = std::make_shared<SectorBasis>(SectorBasis::full(s.geometry.size(), s.geometry.vacancies));
    return evolve_full(s.geometry, s.config, s.law, StateVector::product(basis, initial), times);
}

EvolutionResult effective_run(const EffectiveModel& m, Config initial, const std::vector<double>& times,
                              const std::vector<double>& x = {}) {
    const int n_r = popcount(initial);
    std::set<int> vac(m.vacancies.begin(), m.vacancies.end());
    auto basis = std::make_shared<SectorBasis>(SectorBasis::fixed(m.n_sites, n_r, vac));
    EffectiveOptions opt;
    opt.x_positions = x;
    return evolve_effective(m, StateVector::product(basis, initial), times, n_r, opt);
}

}  // namespace

ScenarioOutput two_atom_transfer(const RunSpec& s) {
    const double omega = from_mhz(positive(s, "omega"));
    const double delta = num(s, "delta_over_omega") * omega;
    const double jt = positive(s, "j_over_omega") * omega;
    const int nt = integer(s, "n_times");
    const double span = positive(s, "duration_over_transfer");
    ScenarioOutput out;

    auto run = [&](double d, double j, const std::string& tag) {
        const auto t = two_atom(omega, d, j);
        const double tt = std::numbers::pi / (2.0 * t.j);
        const auto times = linspace(0.0, span * tt, nt);
        const auto ex = exact_run(t.setup, 1, times);
        const auto m = build_effective_model(t.setup.config, t.setup.law, t.setup.geometry);
        const auto ef = effective_run(m, 1, times);
        double peak = 0.0, at = 0.0;
        for (std::size_t k = 0; k < times.size(); ++k)
            if (std::abs(times[k] - tt) <= 0.02 * tt && ex.populations(static_cast<Eigen::Index>(k), 1) > peak) {
                peak = ex.populations(static_cast<Eigen::Index>(k), 1);
                at = times[k];
            }
        out.files[tag + "_exact.csv"] = evolution_csv(ex);
        out.files[tag + "_effective.csv"] = evolution_csv(ef);
        return nlohmann::json{{"delta_mhz", to_mhz(d)},
                              {"v_mhz", to_mhz(t.v)},
                              {"spacing_um", t.setup.geometry.distance(0, 1)},
                              {"c6_sign", t.setup.law.c6 > 0.0 ? 1 : -1},
                              {"j_mhz", to_mhz(t.j)},
                              {"j_over_omega", t.j / omega},
                              {"transfer_time_us", tt},
                              {"peak_transfer", peak},
                              {"peak_time_us", at},
                              {"exact_vs_effective_mean_l1", compare_runs(ex, ef).mean_l1}};
    };
    out.summary["main"] = run(delta, jt, "transfer");
    const double weak = num(s, "weak_j_over_omega");
    if (weak > 0.0) out.summary["weak"] = run(num(s, "weak_delta_over_omega") * omega, weak * omega, "weak_transfer");
    return out;
}

ScenarioOutput crosstalk_sweep(const RunSpec& s) {
    const double omega = from_mhz(positive(s, "omega"));
    const double delta = positive(s, "delta_over_omega") * omega;
    const double jt = positive(s, "j_over_omega") * omega;
    const double phase_step = num(s, "color_phase_step");
    const auto seps = list(s, "separations_over_j");
    const int nt = integer(s, "n_times");
    const auto base = two_atom(omega, delta, jt);
    const double tt = std::numbers::pi / (2.0 * base.j);
    const auto times = linspace(0.0, positive(s, "duration_over_transfer") * tt, nt);
    auto basis = std::make_shared<SectorBasis>(SectorBasis::full(2));
    EvolveOptions opt;
    opt.store_snapshots = true;
    const auto mono = evolve_full(base.setup.geometry, base.setup.config, base.setup.law, StateVector::product(basis, 1), times, opt);

    ScenarioOutput out;
    std::vector<std::string> header = {"time", "P1_mono"};
    std::vector<std::vector<double>> rows(times.size());
    for (std::size_t k = 0; k < times.size(); ++k) rows[k] = {times[k], mono.populations(static_cast<Eigen::Index>(k), 1)};
    std::vector<std::vector<double>> table;
    nlohmann::json per = nlohmann::json::array();
    for (double sep : seps) {
        if (!(sep > 0.0)) throw ConfigError("params.separations_over_j: entries must be positive");
        Setup multi = base.setup;
        multi.config.colors.clear();
        const double d = sep * base.j;
        const char* labels[] = {"A", "B", "C"};
        for (int c = 0; c < 3; ++c) {
            const double dc = delta + c * d;
            // Omega_c^2 V / (4 dc (dc + V)) = |J| / 3; a common phase per color leaves J_c unchanged.
            const double oc = std::sqrt(4.0 * dc * (dc + base.v) * (base.j / 3.0) / base.v);
            const cplx w = std::polar(oc, c * phase_step);
            multi.config.colors.push_back(ColorField{labels[c], dc, {{0, w}, {1, w}}});
        }
        const auto m = build_effective_model(multi.config, multi.law, multi.geometry);
        const auto ex = evolve_full(multi.geometry, multi.config, multi.law, StateVector::product(basis, 1), times, opt);
        double deviation = 0.0, infidelity = 0.0;
        for (std::size_t k = 0; k < times.size(); ++k) {
            const double pk = ex.populations(static_cast<Eigen::Index>(k), 1);
            rows[k].push_back(pk);
            deviation = std::max(deviation, std::abs(pk - mono.populations(static_cast<Eigen::Index>(k), 1)));
            infidelity = std::max(infidelity, 1.0 - std::norm(mono.snapshots[k].dot(ex.snapshots[k])));
        }
        header.push_back("P1_sep_" + std::to_string(static_cast<long>(std::lround(sep * 100))) + "e-2");
        const double scaled = infidelity * sep * sep;
        table.push_back({sep, to_mhz(d), infidelity, scaled, deviation, to_mhz(std::abs(m.hopping(1, 0)))});
        per.push_back({{"separation_over_j", sep},
                       {"separation_mhz", to_mhz(d)},
                       {"contamination", infidelity},
                       {"contamination_times_sep2", scaled},
                       {"max_population_deviation", deviation},
                       {"j_total_mhz", to_mhz(std::abs(m.hopping(1, 0)))}});
    }
    out.files["transfer_curves.csv"] = table_csv(header, rows);
    out.files["contamination.csv"] = table_csv(
        {"separation_over_j", "separation_mhz", "contamination", "contamination_times_sep2", "max_population_deviation", "j_total_mhz"},
        table);
    out.summary = {{"j_mhz", to_mhz(base.j)}, {"v_mhz", to_mhz(base.v)}, {"transfer_time_us", tt}, {"sweep", per}};
    return out;
}

namespace {

double derived_triangle_spacing(const std::vector<double>& det, const std::vector<double>& rabi, double c6) {
    const double v = equal_hopping_interaction(from_mhz(det[0]), from_mhz(rabi[0]), from_mhz(det[1]), from_mhz(rabi[1]));
    return spacing_for(v, c6);
}

nlohmann::json model_json(const EffectiveModel& m, const std::vector<int>& loop) {
    nlohmann::json j;
    std::vector<double> mu, hop;
    for (int i = 0; i < m.n_sites; ++i) mu.push_back(to_mhz(m.potential(i)));
    for (std::size_t k = 0; k < loop.size(); ++k)
        hop.push_back(to_mhz(std::abs(m.hopping(loop[(k + 1) % loop.size()], loop[k]))));
    j["potential_mhz"] = mu;
    j["loop_hopping_mhz"] = hop;
    j["loop_flux"] = plaquette_flux(m, loop).wrapped;
    return j;
}

}  // namespace

ScenarioOutput three_atom_chiral(const RunSpec& s) {
    const auto det = list(s, "detunings", 3), rabi = list(s, "rabi", 3);
    double spacing = num(s, "spacing");
    const double c6 = reference_c6();
    if (spacing == 0.0) spacing = derived_triangle_spacing(det, rabi, c6);
    const double flux = num(s, "flux");
    const bool reverse = flag(s, "reverse");
    const int nt = integer(s, "n_times");
    ScenarioOutput out;

    auto run = [&](double f, const std::string& tag) {
        const auto st = three_atom(det, rabi, spacing, f, c6);
        const auto m = build_effective_model(st.config, st.law, st.geometry);
        const double period = chiral_period(m);
        const auto times = linspace(0.0, positive(s, "periods") * period, nt);
        std::vector<double> x;
        for (const auto& p : st.geometry.sites) x.push_back(p.x);
        auto ex = exact_run(st, 1, times);
        const auto ef = effective_run(m, 1, times, x);
        out.files[tag + "_exact.csv"] = evolution_csv(ex);
        out.files[tag + "_effective.csv"] = evolution_csv(ef);
        nlohmann::json j = model_json(m, {0, 1, 2});
        j["period_us"] = period;
        j["mean_l1"] = compare_runs(ex, ef).mean_l1;
        j["max_l1"] = compare_runs(ex, ef).max_l1;
        j["peak_order_exact"] = peak_order(ex, 0);
        j["peak_order_effective"] = peak_order(ef, 0);
        j["exact_step_us"] = ex.step;
        return j;
    };
    out.summary["spacing_um"] = spacing;
    out.summary["v_mhz"] = to_mhz(c6 / std::pow(spacing, 6));
    out.summary["forward"] = run(reverse ? -flux : flux, "chiral");
    out.summary["reversed"] = run(reverse ? flux : -flux, "chiral_reversed");
    return out;
}

ScenarioOutput hh_ladder_collision(const RunSpec& s) {
    const auto det = list(s, "detunings", 4), rabi = list(s, "rabi", 4), col = list(s, "column_flux", 3);
    const auto init = list(s, "initial_sites");
    const double c6 = reference_c6();
    double spacing = num(s, "spacing");
    if (spacing == 0.0)
        spacing = spacing_for(equal_hopping_interaction(from_mhz(det[0]), from_mhz(rabi[0]), from_mhz(det[1]), from_mhz(rabi[1])), c6);
    if (!(spacing > 0.0)) throw ConfigError("params.spacing: must be positive or 0");
    const int nx = 4, ny = 4;
    Setup st;
    st.law.c6 = c6;
    st.geometry = ArrayGeometry::rectangular(nx, ny, spacing, spacing);
    // Rows carry A (even y) or C (odd y); columns carry B (even x) or D (odd x).
    // Column color phase y * theta_x puts theta_x on every vertical link of column x.
    std::vector<double> theta(nx, 0.0);
    for (int x = 1; x < nx; ++x) theta[static_cast<std::size_t>(x)] = theta[static_cast<std::size_t>(x - 1)] + col[static_cast<std::size_t>(x - 1)];
    const char* labels[] = {"A", "B", "C", "D"};
    for (int c = 0; c < 4; ++c) st.config.colors.push_back(ColorField{labels[c], from_mhz(det[static_cast<std::size_t>(c)]), {}});
    for (int y = 0; y < ny; ++y)
        for (int x = 0; x < nx; ++x) {
            const int i = x + nx * y;
            const int row_color = (y % 2 == 0) ? 0 : 2, col_color = (x % 2 == 0) ? 1 : 3;
            st.config.colors[static_cast<std::size_t>(row_color)].rabi[i] = from_mhz(rabi[static_cast<std::size_t>(row_color)]);
            st.config.colors[static_cast<std::size_t>(col_color)].rabi[i] =
                std::polar(from_mhz(rabi[static_cast<std::size_t>(col_color)]), y * theta[static_cast<std::size_t>(x)]);
        }
    Config initial = 0;
    for (double v : init) {
        const int i = static_cast<int>(v);
        if (i < 0 || i >= nx * ny || v != i) throw ConfigError("params.initial_sites: entries must be site indices in [0, 16)");
        initial |= 1ULL << i;
    }
    if (popcount(initial) != 2) throw ConfigError("params.initial_sites: exactly two distinct sites required");
    const auto m = build_effective_model(st.config, st.law, st.geometry);
    const auto times = linspace(0.0, positive(s, "duration"), integer(s, "n_times"));

    // Lattice units centered on the array: x in {-1.5, -0.5, 0.5, 1.5}.
    std::vector<double> xs, ys;
    for (int i = 0; i < nx * ny; ++i) {
        xs.push_back(i % nx - 0.5 * (nx - 1));
        ys.push_back(i / nx - 0.5 * (ny - 1));
    }
    std::vector<int> left, right;
    for (int i = 0; i < nx * ny; ++i) (xs[static_cast<std::size_t>(i)] <= 0.0 ? left : right).push_back(i);

    ScenarioOutput out;
    auto trajectories = [&](const EvolutionResult& r, const std::string& tag) {
        const auto lx = region_com(r, xs, left), ly = region_com(r, ys, left);
        const auto rx = region_com(r, xs, right), ry = region_com(r, ys, right);
        std::vector<std::vector<double>> rows;
        double min_sep = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < times.size(); ++k) {
            const double sep = std::hypot(rx[k] - lx[k], ry[k] - ly[k]);
            min_sep = std::min(min_sep, sep);
            rows.push_back({times[k], lx[k], ly[k], rx[k], ry[k], sep});
        }
        out.files[tag + "_com.csv"] = table_csv({"time", "x_left", "y_left", "x_right", "y_right", "separation"}, rows);
        out.files[tag + "_populations.csv"] = evolution_csv(r);
        return min_sep;
    };
    const auto ef = effective_run(m, initial, times, xs);
    out.summary["spacing_um"] = spacing;
    out.summary["v_nn_mhz"] = to_mhz(pair_interaction(st.geometry, st.law, 0, 1));
    std::vector<double> fl;
    for (int px = 0; px + 1 < nx; ++px) fl.push_back(plaquette_flux(m, {px, px + 1, px + 1 + nx, px + nx}).wrapped);
    out.summary["column_flux_measured"] = fl;
    out.summary["j_horizontal_mhz"] = to_mhz(std::abs(m.hopping(1, 0)));
    out.summary["j_vertical_mhz"] = to_mhz(std::abs(m.hopping(nx, 0)));
    out.summary["effective_min_separation"] = trajectories(ef, "effective");
    if (flag(s, "full_evolution")) {
        auto basis = std::make_shared<SectorBasis>(SectorBasis::full(nx * ny));
        EvolveOptions opt;
        const auto ex = evolve_full(st.geometry, st.config, st.law, StateVector::product(basis, initial), times, opt);
        out.summary["exact_min_separation"] = trajectories(ex, "exact");
        out.summary["exact_step_us"] = ex.step;
        out.summary["dimension"] = basis->dim();
        out.summary["mean_l1"] = compare_runs(ex, ef).mean_l1;
        out.summary["max_l1"] = compare_runs(ex, ef).max_l1;
        double leak = 0.0;
        for (Eigen::Index t = 0; t < ex.excitation_number.rows(); ++t) leak = std::max(leak, 1.0 - ex.excitation_number(t, 2));
        out.summary["max_leakage_from_two_excitations"] = leak;
    }
    return out;
}

ScenarioOutput potential_balance(const RunSpec& s) {
    const auto det = list(s, "detunings", 3), rabi = list(s, "rabi", 3);
    const double spacing = positive(s, "spacing"), flux = num(s, "flux");
    const int ref = integer(s, "reference_site");
    if (ref < 0 || ref > 2) throw ConfigError("params.reference_site: must be 0, 1 or 2");
    const auto st = three_atom(det, rabi, spacing, flux, reference_c6());
    const auto before = build_effective_model(st.config, st.law, st.geometry);
    const auto bal = balance_potentials(st.config, st.law, st.geometry, ref);
    const auto after = build_effective_model(bal.config, st.law, st.geometry);
    const double period = chiral_period(after);
    const auto times = linspace(0.0, positive(s, "periods") * period, integer(s, "n_times"));
    const auto rb = effective_run(before, 1, times), ra = effective_run(after, 1, times);

    // 1 - smallest peak population: zero for perfect three-fold chiral transfer.
    auto asymmetry = [&](const EvolutionResult& r) {
        double worst = 1.0;
        for (int i = 0; i < 3; ++i) {
            double best = 0.0;
            for (std::size_t k = 0; k < times.size(); ++k)
                if (i != 0 || times[k] >= 0.5 * period) best = std::max(best, r.populations(static_cast<Eigen::Index>(k), i));
            worst = std::min(worst, best);
        }
        return 1.0 - worst;
    };
    double min_delta = std::numeric_limits<double>::infinity();
    for (double d : det) min_delta = std::min(min_delta, std::abs(from_mhz(d)));
    ScenarioOutput out;
    out.files["before.csv"] = evolution_csv(rb);
    out.files["after.csv"] = evolution_csv(ra);
    std::vector<std::vector<double>> shifts;
    for (int i = 0; i < 3; ++i) shifts.push_back({static_cast<double>(i), to_mhz(bal.config.shift(i)), to_mhz(before.potential(i)), to_mhz(after.potential(i))});
    out.files["shifts.csv"] = table_csv({"site", "detuning_shift_mhz", "potential_before_mhz", "potential_after_mhz"}, shifts);
    out.summary = {{"iterations", bal.iterations},
                   {"residual_mhz", to_mhz(bal.residual)},
                   {"residual_over_delta", bal.residual / min_delta},
                   {"asymmetry_before", asymmetry(rb)},
                   {"asymmetry_after", asymmetry(ra)},
                   {"period_us", period},
                   {"before", model_json(before, {0, 1, 2})},
                   {"after", model_json(after, {0, 1, 2})}};
    return out;
}

ScenarioOutput hopping_vs_spacing(const RunSpec& s) {
    const double omega = from_mhz(positive(s, "omega")), delta = from_mhz(num(s, "delta"));
    const double d0 = positive(s, "d_min"), d1 = positive(s, "d_max");
    if (!(d1 > d0)) throw ConfigError("params.d_max: must exceed d_min");
    const double j_inf = omega * omega / (4.0 * delta);
    InteractionLaw law{reference_c6()};
    // 3 x 2 array, index x + 3 y; partners of site 0 at d, sqrt2 d, 2 d, sqrt5 d.
    const int partner[4] = {1, 4, 2, 5};
    std::vector<std::vector<double>> rows;
    bool monotone = true;
    std::vector<double> prev;
    for (double d : linspace(d0, d1, integer(s, "n_d"))) {
        auto g = ArrayGeometry::rectangular(3, 2, d, d);
        DressingConfig cfg;
        ColorField f{"A", delta, {}};
        for (int i = 0; i < 6; ++i) f.rabi[i] = omega;
        cfg.colors = {f};
        std::vector<double> row = {d};
        std::vector<double> js;
        for (int k : partner) js.push_back(std::abs(hopping_strength(cfg, law, g, 0, k, "A")) / j_inf);
        row.insert(row.end(), js.begin(), js.end());
        std::vector<double> ratios;
        for (int k = 1; k < 4; ++k) ratios.push_back(js[0] / js[static_cast<std::size_t>(k)]);
        if (!prev.empty())
            for (int k = 0; k < 3; ++k)
                if (ratios[static_cast<std::size_t>(k)] < prev[static_cast<std::size_t>(k)]) monotone = false;
        prev = ratios;
        row.insert(row.end(), ratios.begin(), ratios.end());
        row.push_back(to_mhz(pair_interaction(g, law, 0, 1)));
        rows.push_back(row);
    }
    ScenarioOutput out;
    out.files["hopping.csv"] = table_csv({"spacing_um", "J1_norm", "J2_norm", "J3_norm", "J4_norm", "J1_over_J2", "J1_over_J3",
                                          "J1_over_J4", "v_nn_mhz"},
                                         rows);
    out.summary = {{"j_inf_mhz", to_mhz(j_inf)},
                   {"j1_norm_at_d_min", rows.front()[1]},
                   {"j4_norm_at_d_min", rows.front()[4]},
                   {"j1_norm_at_d_max", rows.back()[1]},
                   {"nearest_neighbor_dominance_monotone", monotone}};
    return out;
}

}  // namespace rydflux::scenarios::detail
