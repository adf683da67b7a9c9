// effective.cpp — closed-form effective models
#include "rydflux/effective.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

namespace rydflux {

bool EffectiveModel::vacant(int i) const {
    return std::find(vacancies.begin(), vacancies.end(), i) != vacancies.end();
}

namespace {

void check_pole(double den, double ref, const char* where) {
    if (std::abs(den) <= 1e-12 * std::abs(ref)) throw std::invalid_argument(std::string(where) + ": resonance pole");
}

// Single-channel amplitude <i|H|j>, symmetrized over the two orderings of the virtual processes.
cplx channel_hop(const DressingConfig& cfg, double v, int c, int i, int j) {
    const double di = cfg.detuning(c, i);
    const double dj = cfg.detuning(c, j);
    check_pole(di, di, "hopping_strength");
    check_pole(dj, dj, "hopping_strength");
    check_pole(di + v, di, "hopping_strength");
    check_pole(dj + v, dj, "hopping_strength");
    const cplx pre = cfg.rabi(c, i) * std::conj(cfg.rabi(c, j)) * 0.25;
    if (di == dj) return pre * (v / (di * (di + v)));
    return pre * (0.5 * (1.0 / dj - 1.0 / (di + v) + 1.0 / di - 1.0 / (dj + v)));
}

}  // namespace

cplx hopping_strength(const DressingConfig& cfg, const InteractionLaw& law, const ArrayGeometry& g, int i, int j,
                      const std::string& color) {
    if (i == j) throw std::invalid_argument("hopping_strength: identical sites");
    const int c = cfg.color_index(color);
    if (c < 0 || !cfg.colors[c].rabi.count(i) || !cfg.colors[c].rabi.count(j))
        throw std::invalid_argument("hopping_strength: color '" + color + "' is not a channel of the pair");
    return channel_hop(cfg, pair_interaction(g, law, i, j), c, i, j);
}

double chemical_potential(const DressingConfig& cfg, const InteractionLaw& law, const ArrayGeometry& g, int i) {
    if (g.vacant(i)) throw std::invalid_argument("chemical_potential: vacant site");
    double mu = 0.0;
    for (int c : cfg.colors_at(i)) {
        const double d = cfg.detuning(c, i);
        check_pole(d, d, "chemical_potential");
        mu += std::norm(cfg.rabi(c, i)) / (4.0 * d);
    }
    for (int j : g.active_sites()) {
        if (j == i) continue;
        const double v = pair_interaction(g, law, i, j);
        for (int c : cfg.colors_at(j)) {
            const double d = cfg.detuning(c, j);
            check_pole(d + v, d, "chemical_potential");
            mu -= std::norm(cfg.rabi(c, j)) / (4.0 * (d + v));
        }
    }
    return mu;
}

double onsite_energy(const DressingConfig& cfg, const InteractionLaw& law, const ArrayGeometry& g, int i) {
    return chemical_potential(cfg, law, g, i) + cfg.shift(i);
}

EffectiveModel build_effective_model(const DressingConfig& cfg, const InteractionLaw& law, const ArrayGeometry& g) {
    const int n = g.size();
    EffectiveModel m;
    m.n_sites = n;
    m.hopping = Eigen::MatrixXcd::Zero(n, n);
    m.potential = Eigen::VectorXd::Zero(n);
    m.density_interaction = Eigen::MatrixXd::Zero(n, n);
    m.vacancies.assign(g.vacancies.begin(), g.vacancies.end());
    const auto active = g.active_sites();
    for (std::size_t a = 0; a < active.size(); ++a) {
        const int i = active[a];
        m.potential(i) = onsite_energy(cfg, law, g, i);
        for (std::size_t b = a + 1; b < active.size(); ++b) {
            const int j = active[b];
            const double v = pair_interaction(g, law, i, j);
            m.density_interaction(i, j) = v;
            m.density_interaction(j, i) = v;
            cplx h{0.0, 0.0};
            for (int c : cfg.colors_at(i))
                if (cfg.colors[c].rabi.count(j)) h += channel_hop(cfg, v, c, i, j);
            m.hopping(i, j) = h;
            m.hopping(j, i) = std::conj(h);
        }
    }
    return m;
}

double wrap_angle(double a) {
    double w = std::remainder(a, two_pi);   // [-pi, pi]
    if (w <= -std::numbers::pi) w += two_pi;
    return w;
}

FluxResult plaquette_flux(const EffectiveModel& m, const std::vector<int>& loop) {
    if (loop.size() < 2) throw std::invalid_argument("plaquette_flux: loop needs at least two sites");
    FluxResult r;
    for (std::size_t k = 0; k < loop.size(); ++k) {
        const int cur = loop[k];
        const int next = loop[(k + 1) % loop.size()];
        const cplx h = m.hopping(next, cur);
        if (h == cplx{0.0, 0.0})
            throw std::invalid_argument("plaquette_flux: broken loop at link " + std::to_string(cur) + "->" +
                                        std::to_string(next));
        r.raw += std::arg(h);
    }
    r.wrapped = wrap_angle(r.raw);
    return r;
}

BalanceResult balance_potentials(const DressingConfig& cfg, const InteractionLaw& law, const ArrayGeometry& g,
                                 int reference_site, double tol, int max_iter) {
    if (reference_site < 0 || reference_site >= g.size() || g.vacant(reference_site) ||
        !cfg.dressed(reference_site))
        throw std::invalid_argument("balance_potentials: reference site is not dressed");
    double max_det = 0.0;
    for (const auto& c : cfg.colors) max_det = std::max(max_det, std::abs(c.detuning));
    if (tol <= 0.0) tol = 1e-9 * max_det;

    BalanceResult res;
    res.config = cfg;
    res.delta.assign(g.size(), 0.0);
    std::vector<int> sites;
    for (int i : g.active_sites())
        if (cfg.dressed(i)) sites.push_back(i);

    for (int it = 0; it < max_iter; ++it) {
        const double ref = onsite_energy(res.config, law, g, reference_site);
        std::vector<double> r(g.size(), 0.0);
        double worst = 0.0;
        for (int i : sites) {
            r[i] = onsite_energy(res.config, law, g, i) - ref;
            worst = std::max(worst, std::abs(r[i]));
        }
        res.residual = worst;
        res.iterations = it;
        if (worst < tol) return res;
        for (int i : sites) {
            if (i == reference_site) continue;
            res.delta[i] += r[i];
            res.config.site_shift[i] = res.config.shift(i) - r[i];
        }
    }
    std::ostringstream os;
    os << "balance_potentials: no convergence after " << max_iter << " iterations, residual " << res.residual;
    throw NumericalError(os.str());
}

cplx dimer_hop(const DressingConfig& cfg, const InteractionLaw& law, const ArrayGeometry& g, int pinned, int from,
               int to, const std::string& color, double degeneracy_tol) {
    const int i = pinned, k = from, j = to;
    if (i == j || i == k || j == k) throw std::invalid_argument("dimer_hop: sites must be distinct");
    const int c = cfg.color_index(color);
    if (c < 0 || !cfg.colors[c].rabi.count(j) || !cfg.colors[c].rabi.count(k))
        throw std::invalid_argument("dimer_hop: color '" + color + "' is not a channel of the pair");
    const double vij = pair_interaction(g, law, i, j);
    const double vik = pair_interaction(g, law, i, k);
    const double vjk = pair_interaction(g, law, j, k);
    const double vnn = 0.5 * (vij + vik);
    const double d = 0.5 * (cfg.detuning(c, j) + cfg.detuning(c, k));
    check_pole(d + vnn, d, "dimer_hop");
    check_pole(d + vnn + vjk, d, "dimer_hop");
    const cplx j2 = cfg.rabi(c, j) * std::conj(cfg.rabi(c, k)) * vjk / (4.0 * (d + vnn) * (d + vnn + vjk));
    if (std::abs(vij - vik) > degeneracy_tol * std::abs(j2)) {
        std::ostringstream os;
        os << "dimer_hop: quasi-degeneracy violated, |V_ij - V_ik| = " << std::abs(vij - vik)
           << " exceeds tolerance x |J2| = " << degeneracy_tol * std::abs(j2);
        throw std::invalid_argument(os.str());
    }
    return j2;
}

DoublonModel doublon_com_model(double jx, double jy, double phi, double d1, double d2, double d3) {
    if (d1 == 0.0 || d2 == 0.0 || d3 == 0.0) throw std::invalid_argument("doublon_com_model: zero interaction gap");
    DoublonModel m;
    m.d1 = d1;
    m.d2 = d2;
    m.d3 = d3;
    m.com_hopping_x = 2.0 * jx * jx / d2;
    m.com_hopping_y = jy * jy / d1 + jy * jy / d3;
    m.com_flux_raw = 2.0 * phi;
    m.com_flux = wrap_angle(2.0 * phi);
    return m;
}

namespace {
constexpr double hbar = 1.054571817e-34;       // J s
constexpr double bohr_radius = 5.29177210903e-11;  // m
}  // namespace

PowerBudget power_budget(double j, double eps_b, double eps_c, double w0_um, int n_sites, double d_eff_ea0,
                         double alpha, const ColorScheme& scheme) {
    if (!(j > 0.0)) throw std::invalid_argument("power_budget: J must be positive");
    if (!(eps_b > 0.0 && eps_b < 1.0) || !(eps_c > 0.0 && eps_c < 1.0))
        throw std::invalid_argument("power_budget: error budgets must lie in (0, 1)");
    if (!(w0_um > 0.0) || n_sites < 1 || !(d_eff_ea0 > 0.0) || !(alpha > 0.0) || scheme.n_colors < 1 ||
        !(scheme.bitflip_constant > 0.0))
        throw std::invalid_argument("power_budget: nonphysical input");

    PowerBudget b;
    b.beam_waist = w0_um;
    b.site_count = n_sites;
    b.effective_dipole = d_eff_ea0;
    b.alpha = alpha;
    b.detuning = j * (2.0 / eps_b) * scheme.bitflip_constant;
    b.color_gap = j / std::sqrt(eps_c);

    const double d_m = d_eff_ea0 * bohr_radius;
    const double w0_m = w0_um * 1e-6;
    const double om_a2 = 4.0 * j * b.detuning;   // rad^2/us^2
    double intensity_sum = 0.0;
    for (int k = 0; k < scheme.n_colors; ++k) {
        const double om2 = om_a2 * (1.0 + k * b.color_gap / b.detuning);
        const double om2_si = om2 * 1e12;
        const double inten = hbar * om2_si / (8.0 * std::numbers::pi * alpha * d_m * d_m);
        b.rabi.push_back(std::sqrt(om2));
        b.intensity.push_back(inten);
        intensity_sum += inten;
    }
    b.total_power = std::numbers::pi * w0_m * w0_m * n_sites * intensity_sum / 2.0;

    const double j_si = j * 1e6;
    const double k = scheme.n_colors, c = scheme.bitflip_constant;
    b.total_power_closed_form = (w0_m * w0_m * n_sites * hbar / (2.0 * alpha * d_m * d_m)) * j_si * j_si *
                                (c * k / eps_b + k * (k - 1.0) / (4.0 * std::sqrt(eps_c)));
    return b;
}

nlohmann::json to_json(const EffectiveModel& m) {
    nlohmann::json j;
    j["n_sites"] = m.n_sites;
    j["vacancies"] = m.vacancies;
    auto& hop = j["hopping"] = nlohmann::json::array();
    auto& vv = j["density_interaction"] = nlohmann::json::array();
    for (int r = 0; r < m.n_sites; ++r) {
        nlohmann::json row = nlohmann::json::array(), vrow = nlohmann::json::array();
        for (int c = 0; c < m.n_sites; ++c) {
            row.push_back({m.hopping(r, c).real(), m.hopping(r, c).imag()});
            vrow.push_back(m.density_interaction(r, c));
        }
        hop.push_back(row);
        vv.push_back(vrow);
    }
    j["potential"] = std::vector<double>(m.potential.data(), m.potential.data() + m.potential.size());
    return j;
}

EffectiveModel effective_model_from_json(const nlohmann::json& j) {
    EffectiveModel m;
    m.n_sites = j.at("n_sites").get<int>();
    m.vacancies = j.at("vacancies").get<std::vector<int>>();
    m.hopping = Eigen::MatrixXcd::Zero(m.n_sites, m.n_sites);
    m.density_interaction = Eigen::MatrixXd::Zero(m.n_sites, m.n_sites);
    m.potential = Eigen::VectorXd::Zero(m.n_sites);
    const auto pot = j.at("potential").get<std::vector<double>>();
    for (int r = 0; r < m.n_sites; ++r) {
        m.potential(r) = pot.at(r);
        for (int c = 0; c < m.n_sites; ++c) {
            const auto& e = j.at("hopping").at(r).at(c);
            m.hopping(r, c) = cplx(e.at(0).get<double>(), e.at(1).get<double>());
            m.density_interaction(r, c) = j.at("density_interaction").at(r).at(c).get<double>();
        }
    }
    return m;
}

std::string hopping_table_csv(const EffectiveModel& m) {
    std::ostringstream os;
    os << std::setprecision(12);
    os << "i,j,abs_J,arg_J\n";
    for (int i = 0; i < m.n_sites; ++i)
        for (int j = i + 1; j < m.n_sites; ++j) {
            const cplx h = m.hopping(i, j);
            if (h == cplx{0.0, 0.0}) continue;
            os << i << ',' << j << ',' << std::abs(h) << ',' << std::arg(h) << '\n';
        }
    return os.str();
}

}  // namespace rydflux
