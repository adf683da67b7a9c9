// core.cpp — geometry, dressing and validation
#include "rydflux/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace rydflux {

std::vector<int> ArrayGeometry::active_sites() const {
    std::vector<int> out;
    out.reserve(sites.size());
    for (int i = 0; i < size(); ++i)
        if (!vacant(i)) out.push_back(i);
    return out;
}

double ArrayGeometry::distance(int i, int j) const {
    const double ddx = sites.at(i).x - sites.at(j).x;
    const double ddy = sites.at(i).y - sites.at(j).y;
    return std::hypot(ddx, ddy);
}

ArrayGeometry ArrayGeometry::rectangular(int nx, int ny, double dx, double dy) {
    if (nx < 1 || ny < 1) throw ConfigError("rectangular: empty lattice");
    ArrayGeometry g;
    for (int iy = 0; iy < ny; ++iy)
        for (int ix = 0; ix < nx; ++ix) g.sites.push_back({ix * dx, iy * dy});
    g.dx = dx;
    g.dy = dy;
    return g;
}

void check_geometry(const ArrayGeometry& g) {
    for (int v : g.vacancies)
        if (v < 0 || v >= g.size())
            throw ConfigError("geometry: vacancy index " + std::to_string(v) + " out of range");
    for (int i = 0; i < g.size(); ++i)
        for (int j = i + 1; j < g.size(); ++j)
            if (!(g.distance(i, j) > 0.0))
                throw ConfigError("geometry: sites " + std::to_string(i) + " and " + std::to_string(j) +
                                  " coincide");
}

double pair_interaction(const ArrayGeometry& g, const InteractionLaw& law, int i, int j) {
    if (i == j) throw std::invalid_argument("pair_interaction: identical sites");
    if (g.vacant(i) || g.vacant(j)) throw std::invalid_argument("pair_interaction: vacant site");
    const double r = g.distance(i, j);
    const double r2 = r * r;
    return law.c6 / (r2 * r2 * r2);
}

int DressingConfig::color_index(const std::string& label) const {
    for (std::size_t c = 0; c < colors.size(); ++c)
        if (colors[c].label == label) return static_cast<int>(c);
    return -1;
}

std::vector<int> DressingConfig::colors_at(int site) const {
    std::vector<int> out;
    for (std::size_t c = 0; c < colors.size(); ++c)
        if (colors[c].rabi.count(site)) out.push_back(static_cast<int>(c));
    return out;
}

double DressingConfig::shift(int site) const {
    auto it = site_shift.find(site);
    return it == site_shift.end() ? 0.0 : it->second;
}

cplx DressingConfig::rabi(int color, int site) const {
    const auto& m = colors.at(color).rabi;
    auto it = m.find(site);
    return it == m.end() ? cplx{0.0, 0.0} : it->second;
}

double DressingConfig::max_dressing() const {
    double m = 0.0;
    for (std::size_t c = 0; c < colors.size(); ++c)
        for (const auto& [site, om] : colors[c].rabi)
            m = std::max(m, std::abs(om) / std::abs(detuning(static_cast<int>(c), site)));
    return m;
}

std::set<std::string> channels(const DressingConfig& cfg, int i, int j) {
    std::set<std::string> out;
    for (const auto& c : cfg.colors)
        if (c.rabi.count(i) && c.rabi.count(j)) out.insert(c.label);
    return out;
}

void check_noise(const NoiseSpec& n) {
    if (!(n.phase_noise_rate >= 0.0) || !(n.doppler_sigma >= 0.0) || !(n.decay_rate >= 0.0))
        throw ConfigError("noise: rates must be non-negative");
}

std::string to_string(NoiseSpec::Mode m) {
    switch (m) {
        case NoiseSpec::Mode::global: return "global";
        case NoiseSpec::Mode::per_color: return "per_color";
        case NoiseSpec::Mode::per_atom: return "per_atom";
    }
    return "global";
}

NoiseSpec::Mode noise_mode_from_string(const std::string& s) {
    if (s == "global") return NoiseSpec::Mode::global;
    if (s == "per_color") return NoiseSpec::Mode::per_color;
    if (s == "per_atom") return NoiseSpec::Mode::per_atom;
    throw ConfigError("noise mode must be one of global, per_color, per_atom (got '" + s + "')");
}

Diagnostics validate(const ArrayGeometry& g, const DressingConfig& cfg, const InteractionLaw& law) {
    check_geometry(g);
    if (!std::isfinite(law.c6) || law.c6 == 0.0) throw ConfigError("interaction: c6 must be finite and nonzero");

    Diagnostics d;
    std::set<std::string> labels;
    for (const auto& c : cfg.colors) {
        if (!labels.insert(c.label).second) throw ConfigError("dressing: duplicate color label '" + c.label + "'");
        if (!std::isfinite(c.detuning) || c.detuning == 0.0)
            throw ConfigError("dressing: color '" + c.label + "' has zero detuning");
        for (const auto& [site, om] : c.rabi) {
            if (site < 0 || site >= g.size())
                throw ConfigError("dressing: color '" + c.label + "' addresses unknown site " + std::to_string(site));
            if (g.vacant(site))
                throw ConfigError("dressing: color '" + c.label + "' addresses vacant site " + std::to_string(site));
            if (!std::isfinite(om.real()) || !std::isfinite(om.imag()))
                throw ConfigError("dressing: non-finite Rabi amplitude");
        }
    }
    for (const auto& [site, s] : cfg.site_shift)
        if (site < 0 || site >= g.size() || !std::isfinite(s)) throw ConfigError("dressing: bad site shift");

    d.max_dressing = cfg.max_dressing();
    d.min_detuning_gap = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < cfg.colors.size(); ++a)
        for (std::size_t b = a + 1; b < cfg.colors.size(); ++b) {
            const double gap = std::abs(cfg.colors[a].detuning - cfg.colors[b].detuning);
            if (gap == 0.0)
                throw ConfigError("dressing: colors '" + cfg.colors[a].label + "' and '" + cfg.colors[b].label +
                                  "' have equal detunings");
            d.min_detuning_gap = std::min(d.min_detuning_gap, gap);
        }

    // Resonance hazards: every term Delta_{Theta_j} + V_ij entering the second-order model.
    const auto active = g.active_sites();
    double max_j = 0.0;
    for (int i : active) {
        for (int j : active) {
            if (i == j) continue;
            const double v = pair_interaction(g, law, i, j);
            for (int c : cfg.colors_at(j)) {
                const double den = cfg.detuning(c, j) + v;
                const double om = std::abs(cfg.rabi(c, j));
                if (std::abs(den) <= 1e-12 * std::abs(cfg.detuning(c, j))) {
                    std::ostringstream os;
                    os << "dressing: Delta_" << cfg.colors[c].label << " + V_" << i << j
                       << " vanishes (perturbative pole)";
                    throw ConfigError(os.str());
                }
                if (om > 0.0 && std::abs(den) < 5.0 * om) {
                    std::ostringstream os;
                    os << "resonance hazard: |Delta_" << cfg.colors[c].label << " + V_" << i << "," << j
                       << "| = " << std::abs(den) << " rad/us is below 5 |Omega|";
                    d.warnings.push_back(os.str());
                }
            }
            if (j > i) {
                cplx jsum{0.0, 0.0};
                for (int c : cfg.colors_at(i)) {
                    const cplx oj = cfg.rabi(c, j);
                    if (oj == cplx{0.0, 0.0}) continue;
                    const double di = cfg.detuning(c, i), dj = cfg.detuning(c, j);
                    jsum += cfg.rabi(c, i) * std::conj(oj) * 0.125 *
                            (1.0 / dj - 1.0 / (di + v) + 1.0 / di - 1.0 / (dj + v));
                }
                max_j = std::max(max_j, std::abs(jsum));
            }
        }
    }
    d.max_crosstalk = std::isfinite(d.min_detuning_gap) ? max_j / d.min_detuning_gap : 0.0;
    if (d.max_dressing > 0.3) {
        std::ostringstream os;
        os << "weak-dressing parameter max|Omega/Delta| = " << d.max_dressing << " is large";
        d.warnings.push_back(os.str());
    }
    return d;
}

}  // namespace rydflux
