// scenarios_spectra.cpp — cylinder spectra, Chern numbers and edge-packet transport
#include "scenario_impl.hpp"

#include "rydflux/linalg.hpp"
#include "rydflux/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rydflux::scenarios::detail {

namespace {

CylinderModel cylinder_from(const RunSpec& s) {
    CylinderModel m;
    m.lx = s.params.contains("lx") ? integer(s, "lx") : 9;
    m.jx = from_mhz(positive(s, "jx"));
    m.jy = m.jx / positive(s, "jx_over_jy");
    m.flux = num(s, "flux");
    const auto v = list(s, "v_over_jx", 4);
    m.v_override = {{{0, 1}, v[0] * m.jx}, {{0, 2}, v[1] * m.jx}, {{0, 3}, v[2] * m.jx}, {{1, 2}, v[3] * m.jx}};
    m.c6 = reference_c6();
    m.dx_um = positive(s, "dx");
    m.dy_um = positive(s, "dy");
    if (s.params.contains("r_max")) m.r_max = integer(s, "r_max");
    check_cylinder(m);
    return m;
}

struct Cluster {
    double lo, hi;
};

// Groups sorted energies into bands separated by gaps wider than `min_gap`.
std::vector<Cluster> clusters(std::vector<double> e, double min_gap) {
    std::vector<Cluster> c;
    std::sort(e.begin(), e.end());
    for (double x : e) {
        if (c.empty() || x - c.back().hi > min_gap)
            c.push_back({x, x});
        else
            c.back().hi = x;
    }
    return c;
}

std::vector<double> bulk_type_one(const std::vector<std::vector<BoundStateLabel>>& labels) {
    std::vector<double> e;
    for (const auto& row : labels)
        for (const auto& l : row)
            if (l.type == BoundStateLabel::Type::I && l.edge_side == 0) e.push_back(l.energy);
    return e;
}

// Type-I bulk sub-bands: gaps wider than a tenth of the manifold width. The finite cylinder width opens
// narrower mini-gaps inside each sub-band.
std::vector<Cluster> type_one_subbands(const std::vector<double>& e, double jx) {
    if (e.empty()) return {};
    const auto [lo, hi] = std::minmax_element(e.begin(), e.end());
    return clusters(e, std::max(0.02 * std::abs(jx), 0.1 * (*hi - *lo)));
}

// Lower of the two widest gaps between type-I bulk sub-bands.
std::pair<double, double> doublon_gap(const std::vector<Cluster>& c) {
    if (c.size() < 2) throw NumericalError("edge_transport: type-I manifold shows no gap");
    std::vector<std::pair<double, std::size_t>> gaps;
    for (std::size_t k = 0; k + 1 < c.size(); ++k) gaps.push_back({c[k + 1].lo - c[k].hi, k});
    std::sort(gaps.rbegin(), gaps.rend());
    std::size_t k = gaps[0].second;
    if (gaps.size() > 1) k = std::min(k, gaps[1].second);
    return {c[k].hi, c[k + 1].lo};
}

// Gap between the two lowest torus bands of the single-particle Hofstadter model.
std::pair<double, double> single_gap(const CylinderModel& m) {
    const auto [p, q] = flux_fraction(m.flux);
    if (q < 2) throw ConfigError("edge_transport: flux gives a single band");
    const auto h = hofstadter_torus(m.jx, m.jy, p, q);
    double top0 = -std::numeric_limits<double>::infinity(), bottom1 = std::numeric_limits<double>::infinity();
    const int n = 40;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            const auto e = linalg::eigh(h(two_pi * a / n, two_pi * b / n), false).values;
            top0 = std::max(top0, e(0));
            bottom1 = std::min(bottom1, e(1));
        }
    return {top0, bottom1};
}

std::pair<double, double> inset(std::pair<double, double> g, double f = 0.08) {
    const double w = g.second - g.first;
    return {g.first + f * w, g.second - f * w};
}

nlohmann::json chern_json(const ChernResult& c) {
    return {{"chern", c.chern}, {"raw", c.raw}, {"grid", c.grid}, {"min_gap", c.min_gap}};
}

}  // namespace

ScenarioOutput anisotropic_hh_spectra(const RunSpec& s) {
    const auto m = cylinder_from(s);
    const auto ks = k_grid(integer(s, "n_k"), false);
    const auto spec = sweep_spectrum(m, ks, true, s.jobs, flag(s, "check_convergence"));
    const auto labels = classify_states(spec, m);
    ClassifyThresholds th;
    ScenarioOutput out;
    out.files["bands.csv"] = bands_csv(spec);
    out.files["classification.json"] = classification_json(labels, th).dump(1);

    std::vector<std::vector<double>> rows;
    std::map<std::string, int> counts;
    for (const auto& row : labels)
        for (const auto& l : row) {
            counts[to_string(l.type)] += 1;
            if (!l.bound()) continue;
            rows.push_back({l.k, l.energy / m.jx, static_cast<double>(static_cast<int>(l.type)), static_cast<double>(l.displacement.first),
                            static_cast<double>(l.displacement.second), static_cast<double>(l.edge_side), l.edge_score});
        }
    out.files["bound_states.csv"] = table_csv({"k", "energy_over_jx", "type", "dx", "dy", "edge_side", "edge_score"}, rows);

    const auto env = continuum_envelope(m);
    const auto bands = type_one_subbands(bulk_type_one(labels), m.jx);
    nlohmann::json sub = nlohmann::json::array();
    for (const auto& c : bands) sub.push_back({c.lo / m.jx, c.hi / m.jx});
    // Edge-localized type-I states inside the gaps between bulk sub-bands.
    int left = 0, right = 0;
    for (const auto& row : labels)
        for (const auto& l : row) {
            if (l.type != BoundStateLabel::Type::I || l.edge_side == 0) continue;
            for (std::size_t k = 0; k + 1 < bands.size(); ++k)
                if (l.energy > bands[k].hi && l.energy < bands[k + 1].lo) (l.edge_side < 0 ? left : right) += 1;
        }

    const auto [p, q] = flux_fraction(m.flux);
    const auto single = chern_numbers(hofstadter_torus(m.jx, m.jy, p, q));
    const double v1 = cylinder_interaction(m, 0, 1), v2 = cylinder_interaction(m, 0, 2), v3 = cylinder_interaction(m, 0, 3),
                 v4 = cylinder_interaction(m, 1, 2);
    const auto dm = doublon_com_model(m.jx, m.jy, m.flux, v2 - v1, v2 - v4, v2 - v3);
    const auto [dp, dq] = flux_fraction(dm.com_flux_raw);
    const auto doublon = chern_numbers(hofstadter_torus(dm.com_hopping_x, dm.com_hopping_y, dp, dq));

    out.summary = {{"continuum_over_jx", {env.first / m.jx, env.second / m.jx}},
                   {"state_counts", counts},
                   {"type_one_bulk_subbands_over_jx", sub},
                   {"type_one_edge_states_in_gaps", {{"left", left}, {"right", right}}},
                   {"r_max_change_over_jx", spec.r_max_change / std::abs(m.jx)},
                   {"convergence_checked", spec.convergence_checked},
                   {"single_particle_chern", chern_json(single)},
                   {"doublon_com_flux", dm.com_flux},
                   {"doublon_com_hopping_mhz", {to_mhz(dm.com_hopping_x), to_mhz(dm.com_hopping_y)}},
                   {"doublon_chern", chern_json(doublon)}};
    return out;
}

ScenarioOutput edge_transport(const RunSpec& s) {
    const auto m = cylinder_from(s);
    const int nt = integer(s, "n_times");
    ScenarioOutput out;

    // Single excitation: site amplitudes on the large lattice.
    const int n1 = integer(s, "single_size");
    if (n1 < 4) throw ConfigError("params.single_size: must be at least 4");
    const auto g1 = single_gap(m);
    const auto w1 = inset(g1);
    const auto clean1 = finite_lattice(m, n1, n1);
    const auto packet = prepare_site_edge_packet(clean1, n1, n1, w1.first, w1.second, {0.0, 0.5 * n1}, positive(s, "single_packet_width"));
    const auto path1 = edge_path(n1, n1);
    const int vp1 = integer(s, "single_vacancy");
    std::set<int> vac1;
    if (vp1 >= 0) {
        if (vp1 >= static_cast<int>(path1.size())) throw ConfigError("params.single_vacancy: beyond the edge path");
        vac1.insert(path1[static_cast<std::size_t>(vp1)]);
    }
    const auto defect1 = finite_lattice(m, n1, n1, vac1);
    Eigen::VectorXcd amp = packet.amp;
    for (int v : vac1) amp(v) = 0.0;
    amp.normalize();
    const auto t1 = linspace(0.0, positive(s, "single_duration"), nt);
    const auto tr1 = site_edge_transport(defect1, n1, n1, amp, t1);
    const double transmission = vacancy_transmission(clean1, defect1, packet.amp, g1.first, g1.second);
    {
        std::vector<std::vector<double>> rows;
        for (std::size_t k = 0; k < t1.size(); ++k) {
            std::vector<double> r = {t1[k], tr1.winding_angle[k]};
            r.insert(r.end(), tr1.edge_density[k].begin(), tr1.edge_density[k].end());
            rows.push_back(r);
        }
        std::vector<std::string> h = {"time", "winding"};
        for (std::size_t k = 0; k < path1.size(); ++k) h.push_back("edge_" + std::to_string(k));
        out.files["single_edge.csv"] = table_csv(h, rows);
    }

    // Doublon: two-excitation sector on the small lattice.
    const int n2 = integer(s, "doublon_size");
    if (n2 < 4 || n2 * n2 > 64) throw ConfigError("params.doublon_size: must lie in [4, 8]");
    const auto sweep = sweep_spectrum(m, k_grid(integer(s, "n_k"), false), true, s.jobs, false);
    const auto g2 = doublon_gap(type_one_subbands(bulk_type_one(classify_states(sweep, m)), m.jx));
    const auto w2 = inset(g2);
    const auto path2 = edge_path(n2, n2);
    const int vp2 = integer(s, "doublon_vacancy");
    std::set<int> vac2;
    if (vp2 >= 0) {
        if (vp2 >= static_cast<int>(path2.size())) throw ConfigError("params.doublon_vacancy: beyond the edge path");
        vac2.insert(path2[static_cast<std::size_t>(vp2)]);
    }
    const auto lat2 = finite_lattice(m, n2, n2, vac2);
    auto basis2 = std::make_shared<SectorBasis>(SectorBasis::fixed(n2 * n2, 2, vac2));
    const std::pair<int, int> offset = {0, 2};
    const auto seed = edge_seed(*basis2, n2, n2, {0.0, 1.5}, positive(s, "packet_width"), offset);
    const auto prep = prepare_edge_mode(lat2, n2, n2, 2, w2.first, w2.second, seed);
    const auto t2 = linspace(0.0, positive(s, "doublon_duration"), nt);
    const auto tr2 = edge_transport_scenario(lat2, n2, n2, prep.state, t2, offset);
    {
        std::vector<std::vector<double>> rows;
        for (std::size_t k = 0; k < t2.size(); ++k) {
            std::vector<double> r = {t2[k], tr2.winding_angle[k], tr2.bound_fraction[k]};
            r.insert(r.end(), tr2.edge_density[k].begin(), tr2.edge_density[k].end());
            rows.push_back(r);
        }
        std::vector<std::string> h = {"time", "winding", "bound_fraction"};
        for (std::size_t k = 0; k < path2.size(); ++k) h.push_back("edge_" + std::to_string(k));
        out.files["doublon_edge.csv"] = table_csv(h, rows);
        out.files["doublon_populations.csv"] = evolution_csv(tr2.evolution);
    }
    const double min_bound = *std::min_element(tr2.bound_fraction.begin(), tr2.bound_fraction.end());

    out.summary = {{"single", {{"gap_over_jx", {g1.first / m.jx, g1.second / m.jx}},
                               {"window_over_jx", {w1.first / m.jx, w1.second / m.jx}},
                               {"states", packet.energies.size()},
                               {"mean_edge_score", packet.mean_edge_score},
                               {"final_winding", tr1.winding_angle.back()},
                               {"vacancy_site", vac1.empty() ? -1 : *vac1.begin()},
                               {"transmission", transmission}}},
                   {"doublon", {{"gap_over_jx", {g2.first / m.jx, g2.second / m.jx}},
                                {"window_over_jx", {w2.first / m.jx, w2.second / m.jx}},
                                {"states", prep.energies.size()},
                                {"window_weight", prep.window_weight},
                                {"mean_edge_score", prep.mean_edge_score},
                                {"final_winding", tr2.winding_angle.back()},
                                {"vacancy_site", vac2.empty() ? -1 : *vac2.begin()},
                                {"min_bound_fraction", min_bound}}},
                   {"opposite_chirality", tr1.winding_angle.back() * tr2.winding_angle.back() < 0.0}};
    return out;
}

}  // namespace rydflux::scenarios::detail
