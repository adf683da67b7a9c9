// scenario_common.cpp — parameter access, shared geometries and CSV tables for the scenarios
#include "scenario_impl.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

namespace rydflux::scenarios::detail {

double num(const RunSpec& s, const std::string& key) {
    if (!s.params.contains(key) || !s.params[key].is_number()) throw ConfigError("params." + key + ": expected a number");
    const double v = s.params[key].get<double>();
    if (!std::isfinite(v)) throw ConfigError("params." + key + ": not finite");
    return v;
}

int integer(const RunSpec& s, const std::string& key) {
    const double v = num(s, key);
    if (v != std::floor(v) || std::abs(v) > 1e9) throw ConfigError("params." + key + ": expected an integer");
    return static_cast<int>(v);
}

bool flag(const RunSpec& s, const std::string& key) {
    if (!s.params.contains(key) || !s.params[key].is_boolean()) throw ConfigError("params." + key + ": expected true or false");
    return s.params[key].get<bool>();
}

std::vector<double> list(const RunSpec& s, const std::string& key, std::size_t expected) {
    if (!s.params.contains(key) || !s.params[key].is_array()) throw ConfigError("params." + key + ": expected an array");
    std::vector<double> v;
    for (const auto& e : s.params[key]) {
        if (!e.is_number()) throw ConfigError("params." + key + ": entries must be numbers");
        v.push_back(e.get<double>());
    }
    if (expected > 0 && v.size() != expected)
        throw ConfigError("params." + key + ": expected " + std::to_string(expected) + " entries");
    return v;
}

double positive(const RunSpec& s, const std::string& key) {
    const double v = num(s, key);
    if (!(v > 0.0)) throw ConfigError("params." + key + ": must be positive");
    return v;
}

std::vector<double> linspace(double a, double b, int n) {
    if (n < 2) throw ConfigError("linspace: need at least two samples");
    std::vector<double> t(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) t[static_cast<std::size_t>(k)] = a + (b - a) * k / (n - 1);
    return t;
}

double reference_c6() { return from_mhz(1045.0 * 0.5) * std::pow(4.8, 6); }

double equal_hopping_interaction(double d1, double o1, double d2, double o2) {
    const double den = o1 * o1 * d2 - o2 * o2 * d1;
    if (std::abs(den) < 1e-12 * o1 * o1 * d2) throw ConfigError("equal_hopping_interaction: colors already balanced for every V");
    const double v = (o2 * o2 * d1 * d1 - o1 * o1 * d2 * d2) / den;
    if (!(v > 0.0)) throw ConfigError("equal_hopping_interaction: no repulsive V equalizes the two colors");
    return v;
}

double spacing_for(double v, double c6) {
    if (!(v != 0.0) || !(c6 != 0.0) || (v > 0.0) != (c6 > 0.0)) throw ConfigError("spacing_for: V and C6 must share a sign");
    return std::pow(c6 / v, 1.0 / 6.0);
}

Setup three_atom(const std::vector<double>& det, const std::vector<double>& rabi, double spacing, double flux, double c6) {
    if (det.size() != 3 || rabi.size() != 3) throw ConfigError("three_atom: three detunings and three Rabi frequencies required");
    if (!(spacing > 0.0)) throw ConfigError("three_atom: spacing must be positive");
    Setup s;
    s.law.c6 = c6;
    s.geometry.sites = {{0.0, spacing * std::sqrt(3.0) / 2.0}, {-spacing / 2.0, 0.0}, {spacing / 2.0, 0.0}};
    const char* labels[] = {"A", "B", "C"};
    const int members[3][2] = {{0, 1}, {1, 2}, {2, 0}};
    for (int c = 0; c < 3; ++c) {
        ColorField f;
        f.label = labels[c];
        f.detuning = from_mhz(det[static_cast<std::size_t>(c)]);
        for (int a : members[c]) f.rabi[a] = from_mhz(rabi[static_cast<std::size_t>(c)]);
        s.config.colors.push_back(f);
    }
    // J_{0,2} picks up arg Omega_{0,C}; the loop 0 -> 1 -> 2 then carries -flux.
    s.config.colors[2].rabi[0] *= std::polar(1.0, -flux);
    check_geometry(s.geometry);
    return s;
}

double chiral_period(const EffectiveModel& m) {
    double j = 0.0;
    int n = 0;
    for (int a = 0; a < m.n_sites; ++a)
        for (int b = a + 1; b < m.n_sites; ++b)
            if (std::abs(m.hopping(a, b)) > 0.0) {
                j += std::abs(m.hopping(a, b));
                ++n;
            }
    if (n == 0) throw ConfigError("chiral_period: no hopping");
    return two_pi / (std::sqrt(3.0) * j / n);
}

std::vector<int> peak_order(const EvolutionResult& r, int start, double level) {
    std::vector<std::pair<double, int>> first;
    const Eigen::Index nt = r.populations.rows();
    for (Eigen::Index i = 0; i < r.populations.cols(); ++i) {
        if (i == start) continue;
        for (Eigen::Index t = 1; t + 1 < nt; ++t) {
            const double p = r.populations(t, i);
            if (p > level && p >= r.populations(t - 1, i) && p >= r.populations(t + 1, i)) {
                first.push_back({r.times[static_cast<std::size_t>(t)], static_cast<int>(i)});
                break;
            }
        }
    }
    std::sort(first.begin(), first.end());
    std::vector<int> order;
    for (const auto& f : first) order.push_back(f.second);
    return order;
}

std::string table_csv(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows) {
    std::ostringstream os;
    os << std::setprecision(12);
    for (std::size_t k = 0; k < header.size(); ++k) os << (k ? "," : "") << header[k];
    os << '\n';
    for (const auto& r : rows) {
        for (std::size_t k = 0; k < r.size(); ++k) os << (k ? "," : "") << r[k];
        os << '\n';
    }
    return os.str();
}

}  // namespace rydflux::scenarios::detail
