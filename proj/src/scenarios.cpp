// scenarios.cpp — catalog, configuration resolution, output writing and scenario dispatch
#include "rydflux/scenarios.hpp"

#include "rydflux/core.hpp"
#include "scenario_impl.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

namespace rydflux::scenarios {

namespace {

constexpr double pi = std::numbers::pi;

ParamSpec p(std::string key, nlohmann::json value, std::string unit, std::string doc) {
    return ParamSpec{std::move(key), std::move(value), std::move(unit), std::move(doc)};
}

std::vector<ScenarioInfo> build_catalog() {
    const std::string mhz = "2π×MHz", um = "μm", us = "μs", rate = "1/μs", rad = "rad", one = "1", count = "count";
    std::vector<ScenarioInfo> c;
    c.push_back({"two_atom_transfer",
                 "time trace of monochromatic excitation transfer between two dressed atoms",
                 "Exact two-atom dynamics with V solved for a target |J|/Omega; peak transfer near t = pi/(2|J|).",
                 {p("omega", 10.0, mhz, "Rabi frequency of both atoms"),
                  p("delta_over_omega", 4.224, one, "detuning in units of omega"),
                  p("j_over_omega", 0.2, one, "target hopping |J|/omega; V is solved from the second-order formula"),
                  p("weak_j_over_omega", 0.02, one, "second, weakly dressed run for reference (0 disables)"),
                  p("weak_delta_over_omega", 10.0, one, "detuning of the weak-dressing run in units of omega"),
                  p("duration_over_transfer", 1.1, one, "simulated time in units of pi/(2|J|)"),
                  p("n_times", 441, count, "output samples")}});
    c.push_back({"crosstalk_sweep",
                 "transfer curves with three colors at growing frequency separation",
                 "Both atoms carry colors A, B, C with Delta_k = Delta_A + k d and equal per-color hopping |J|/3; "
                 "contamination = largest infidelity against the monochromatic run of the same total |J|.",
                 {p("omega", 10.0, mhz, "Rabi frequency of the monochromatic reference"),
                  p("delta_over_omega", 30.0, one, "detuning of color A in units of omega"),
                  p("j_over_omega", 0.005, one, "total hopping |J|/omega; fixes V"),
                  p("separations_over_j", {2.0, 5.0, 10.0, 20.0, 50.0, 100.0}, one, "color separations d in units of |J|"),
                  p("color_phase_step", 0.0, rad, "laser phase of color k is k times this step"),
                  p("duration_over_transfer", 2.0, one, "simulated time in units of pi/(2|J|)"),
                  p("n_times", 201, count, "output samples")}});
    c.push_back({"three_atom_chiral",
                 "chiral motion of one excitation on a three-atom plaquette",
                 "Exact versus effective dynamics on an equilateral triangle; atom pairs share colors A, B, C.",
                 {p("detunings", {120.0, 140.0, 160.0}, mhz, "Delta_A, Delta_B, Delta_C"),
                  p("rabi", {10.0, 10.9, 11.7}, mhz, "Omega_A, Omega_B, Omega_C"),
                  p("spacing", 0.0, um, "triangle side; 0 derives it from |J_A| = |J_B|"),
                  p("flux", pi / 2, rad, "plaquette flux"),
                  p("reverse", false, one, "negate all Peierls phases"),
                  p("periods", 1.0, one, "simulated time in chiral periods"),
                  p("n_times", 301, count, "output samples")}});
    c.push_back({"hh_ladder_collision",
                 "center-of-mass trajectories of two excitations colliding on a 4x4 Harper-Hofstadter array",
                 "Full 2^16 exact evolution versus the effective model; region-resolved center-of-mass trajectories.",
                 {p("detunings", {120.0, 140.0, 160.0, 180.0}, mhz, "Delta_A..Delta_D"),
                  p("rabi", {10.0, 11.5, 13.1, 14.6}, mhz, "Omega_A..Omega_D"),
                  p("spacing", 0.0, um, "lattice constant; 0 derives it from |J_A| = |J_B|"),
                  p("column_flux", {pi / 3, pi / 2, pi / 3}, rad, "flux of the plaquettes in each of the three columns"),
                  p("initial_sites", {0, 3}, count, "excited sites (index x + 4 y)"),
                  p("duration", 12.0, us, "simulated time"),
                  p("n_times", 121, count, "output samples"),
                  p("full_evolution", true, one, "run the exact 2^16 evolution (false: effective only)")}});
    c.push_back({"anisotropic_hh_spectra",
                 "two-body spectra on a 9-column cylinder, bound-pair types and Chern numbers",
                 "K-resolved two-excitation spectrum, bound-state classification, single-particle and doublon Chern numbers.",
                 {p("lx", 9, count, "columns"),
                  p("jx", 0.5, mhz, "hopping along x"),
                  p("jx_over_jy", 0.6, one, "anisotropy"),
                  p("flux", 2 * pi / 3, rad, "flux per plaquette"),
                  p("v_over_jx", {1045.0, 16.0, 1.4, 7.7}, one, "V1..V4 / J_x at displacements (0,1), (0,2), (0,3), (1,2)"),
                  p("dx", 5.1, um, "lattice constant along x (other interactions from C6/r^6)"),
                  p("dy", 4.8, um, "lattice constant along y"),
                  p("n_k", 201, count, "K points over [0, 2 pi)"),
                  p("r_max", 12, count, "relative-coordinate cutoff"),
                  p("check_convergence", true, one, "repeat with r_max + 2 and compare bound states")}});
    c.push_back({"edge_transport",
                 "chiral edge packets of one excitation and of a type-I doublon passing a vacancy",
                 "Single excitation on a larger open lattice (site amplitudes), doublon on 8x8 (two-excitation basis).",
                 {p("jx", 0.5, mhz, "hopping along x"),
                  p("jx_over_jy", 0.6, one, "anisotropy"),
                  p("flux", 2 * pi / 3, rad, "flux per plaquette"),
                  p("v_over_jx", {1045.0, 16.0, 1.4, 7.7}, one, "V1..V4 / J_x"),
                  p("dx", 5.1, um, "lattice constant along x"),
                  p("dy", 4.8, um, "lattice constant along y"),
                  p("single_size", 16, count, "single-excitation lattice is single_size x single_size"),
                  p("single_vacancy", 10, count, "edge-path position of the vacancy (-1: none)"),
                  p("single_duration", 6.0, us, "single-excitation evolution time"),
                  p("doublon_size", 8, count, "doublon lattice is doublon_size x doublon_size"),
                  p("doublon_vacancy", 23, count, "edge-path position of the doublon vacancy (-1: none)"),
                  p("doublon_duration", 40.0, us, "doublon evolution time"),
                  p("single_packet_width", 2.0, one, "single-excitation seed width in lattice sites"),
                  p("packet_width", 1.5, one, "doublon seed width in lattice sites"),
                  p("n_times", 41, count, "output samples per run"),
                  p("n_k", 16, count, "K points of the cylinder sweep locating the doublon gap")}});
    c.push_back({"phase_noise",
                 "laser phase noise on Rabi oscillations and on three-atom chiral motion",
                 "Stochastic phase paths in the exact Hamiltonian; single atom against the Lindblad oracle; three noise modes.",
                 {p("gamma", 1.0, rate, "dephasing rate"),
                  p("single_omega", 1.0, mhz, "single-atom Rabi frequency"),
                  p("single_delta", 0.5, mhz, "single-atom detuning"),
                  p("single_duration", 3.0, us, "single-atom evolution time"),
                  p("single_runs", 500, count, "single-atom trajectories"),
                  p("chiral_runs", 120, count, "three-atom trajectories per noise mode"),
                  p("chiral_periods", 3.0, one, "three-atom evolution time in chiral periods (>= 2)"),
                  p("n_times", 61, count, "output samples")}});
    c.push_back({"doppler",
                 "Doppler broadening: Ramsey decay and three-atom chiral motion",
                 "Quenched Gaussian detuning offsets per shot.",
                 {p("sigma", 0.044, mhz, "Doppler width Delta_T"),
                  p("ramsey_runs", 4000, count, "Ramsey shots"),
                  p("ramsey_duration", 20.0, us, "Ramsey free-precession window"),
                  p("chiral_runs", 400, count, "three-atom shots (effective model with site offsets)"),
                  p("chiral_duration", 14.0, us, "three-atom evolution time"),
                  p("two_site_samples", 20000, count, "samples for the two-site splitting"),
                  p("n_times", 141, count, "output samples")}});
    c.push_back({"decay_postselect",
                 "Rydberg decay with and without post-selection on the excitation number",
                 "Effective three-atom trajectories with decay jumps and projective readout at each output time.",
                 {p("kappa", 0.2, rate, "decay rate"),
                  p("runs", 2000, count, "trajectories"),
                  p("kappa_t_max", 2.0, one, "final time in units of 1/kappa"),
                  p("n_times", 81, count, "output samples")}});
    c.push_back({"potential_balance",
                 "chiral motion before and after balancing on-site potentials",
                 "Three atoms at a given spacing; detunings per site shifted until the effective potentials agree.",
                 {p("spacing", 5.0, um, "triangle side"),
                  p("detunings", {120.0, 140.0, 160.0}, mhz, "Delta_A, Delta_B, Delta_C"),
                  p("rabi", {10.0, 10.9, 11.7}, mhz, "Omega_A, Omega_B, Omega_C"),
                  p("flux", pi / 2, rad, "plaquette flux"),
                  p("reference_site", 0, count, "site whose potential is kept"),
                  p("periods", 1.0, one, "simulated time in chiral periods"),
                  p("n_times", 301, count, "output samples")}});
    c.push_back({"hopping_vs_spacing",
                 "normalized hopping types versus lattice spacing in a six-atom array",
                 "Monochromatic 3x2 array; J at distances d, sqrt2 d, 2d, sqrt5 d normalized by Omega^2/(4 Delta).",
                 {p("omega", 10.0, mhz, "Rabi frequency"),
                  p("delta", 120.0, mhz, "detuning"),
                  p("d_min", 2.0, um, "smallest spacing"),
                  p("d_max", 12.0, um, "largest spacing"),
                  p("n_d", 51, count, "spacings")}});
    c.push_back({"power_budget",
                 "laser power for a target hopping and error budget",
                 "Closed-form and summed total power for the multicolor scheme.",
                 {p("j", 0.5, mhz, "target hopping"),
                  p("eps_b", 0.01, one, "bit-flip error budget"),
                  p("eps_c", 0.01, one, "crosstalk error budget"),
                  p("beam_waist", 2.0, um, "addressing beam waist"),
                  p("n_sites", 16, count, "addressed sites"),
                  p("dipole", 0.01, one, "effective dipole in e a0"),
                  p("n_colors", 4, count, "colors"),
                  p("bitflip_constant", 2.0, one, "Delta = J (2 / eps_b) x constant")}});
    c.push_back({"floquet_oracle",
                 "Floquet quasienergies and van Vleck terms against the analytic effective model",
                 "Random two- and three-atom multicolor configurations.",
                 {p("n_configs", 50, count, "random configurations"),
                  p("max_ratio", 0.1, one, "largest |Omega/Delta|"),
                  p("bound_constant", 4.0, one, "C in the bound C (Omega/Delta)^4 |Delta|"),
                  p("min_distance", 3.5, um, "smallest pair distance"),
                  p("max_distance", 4.8, um, "largest pair distance")}});
    return c;
}

const std::string& type_name(const nlohmann::json& j) {
    static const std::string names[] = {"null", "object", "array", "string", "boolean", "number"};
    if (j.is_null()) return names[0];
    if (j.is_object()) return names[1];
    if (j.is_array()) return names[2];
    if (j.is_string()) return names[3];
    if (j.is_boolean()) return names[4];
    return names[5];
}

bool same_kind(const nlohmann::json& def, const nlohmann::json& v) {
    if (def.is_number()) return v.is_number();
    if (def.is_array()) {
        if (!v.is_array()) return false;
        for (const auto& e : v)
            if (!e.is_number()) return false;
        return true;
    }
    return type_name(def) == type_name(v);
}

}  // namespace

const std::vector<ScenarioInfo>& catalog() {
    static const std::vector<ScenarioInfo> c = build_catalog();
    return c;
}

const ScenarioInfo& find(const std::string& name) {
    for (const auto& s : catalog())
        if (s.name == name) return s;
    std::string valid;
    for (const auto& s : catalog()) valid += (valid.empty() ? "" : ", ") + s.name;
    throw ConfigError("scenario: unknown name '" + name + "'; valid names: " + valid);
}

std::string catalog_text() {
    std::ostringstream os;
    for (const auto& s : catalog()) {
        os << s.name << "\n  reproduces: " << s.reproduces << "\n  " << s.summary << "\n";
        for (const auto& q : s.params) os << "    " << q.key << " = " << q.value.dump() << " [" << q.unit << "]  " << q.doc << "\n";
    }
    return os.str();
}

void apply_override(nlohmann::json& config, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--override: expected key=value, got '" + assignment + "'");
    const std::string path = assignment.substr(0, eq), text = assignment.substr(eq + 1);
    nlohmann::json value;
    try {
        value = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error&) {
        value = text;
    }
    if (!config.is_object()) config = nlohmann::json::object();
    nlohmann::json* node = &config;
    std::size_t start = 0;
    for (;;) {
        const auto dot = path.find('.', start);
        const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (key.empty()) throw ConfigError("--override: empty path component in '" + path + "'");
        if (dot == std::string::npos) {
            (*node)[key] = value;
            return;
        }
        auto& child = (*node)[key];
        if (child.is_null()) child = nlohmann::json::object();
        if (!child.is_object()) throw ConfigError("--override: '" + key + "' is not an object in '" + path + "'");
        node = &child;
        start = dot + 1;
    }
}

RunSpec resolve(const nlohmann::json& config) {
    if (!config.is_object()) throw ConfigError("config: top level must be an object");
    for (auto it = config.begin(); it != config.end(); ++it) {
        const auto& k = it.key();
        if (k != "scenario" && k != "seed" && k != "jobs" && k != "out" && k != "params")
            throw ConfigError("config: unknown key '" + k + "'");
    }
    RunSpec r;
    if (!config.contains("scenario") || !config["scenario"].is_string()) throw ConfigError("config: 'scenario' must be a string");
    r.scenario = config["scenario"].get<std::string>();
    const auto& info = find(r.scenario);
    if (config.contains("seed")) {
        const auto& s = config["seed"];
        if (!s.is_number_integer() || s.get<long long>() < 0) throw ConfigError("config: 'seed' must be a nonnegative integer");
        r.seed = s.get<std::uint64_t>();
    }
    if (config.contains("jobs")) {
        const auto& j = config["jobs"];
        if (!j.is_number_integer() || j.get<long long>() < 1) throw ConfigError("config: 'jobs' must be a positive integer");
        r.jobs = j.get<int>();
    }
    if (config.contains("out")) {
        if (!config["out"].is_string()) throw ConfigError("config: 'out' must be a string");
        r.out = config["out"].get<std::string>();
    }
    r.params = nlohmann::json::object();
    for (const auto& q : info.params) r.params[q.key] = q.value;
    if (config.contains("params")) {
        const auto& user = config["params"];
        if (!user.is_object()) throw ConfigError("config: 'params' must be an object");
        for (auto it = user.begin(); it != user.end(); ++it) {
            if (!r.params.contains(it.key()))
                throw ConfigError("params." + it.key() + ": unknown key for scenario '" + r.scenario + "'");
            if (!same_kind(r.params[it.key()], it.value()))
                throw ConfigError("params." + it.key() + ": expected " + type_name(r.params[it.key()]) + ", got " +
                                  type_name(it.value()));
            r.params[it.key()] = it.value();
        }
    }
    return r;
}

ScenarioOutput run(const RunSpec& spec) {
    const auto& n = spec.scenario;
    find(n);
    if (n == "two_atom_transfer") return detail::two_atom_transfer(spec);
    if (n == "crosstalk_sweep") return detail::crosstalk_sweep(spec);
    if (n == "three_atom_chiral") return detail::three_atom_chiral(spec);
    if (n == "hh_ladder_collision") return detail::hh_ladder_collision(spec);
    if (n == "anisotropic_hh_spectra") return detail::anisotropic_hh_spectra(spec);
    if (n == "edge_transport") return detail::edge_transport(spec);
    if (n == "phase_noise") return detail::phase_noise(spec);
    if (n == "doppler") return detail::doppler(spec);
    if (n == "decay_postselect") return detail::decay_postselect(spec);
    if (n == "potential_balance") return detail::potential_balance(spec);
    if (n == "hopping_vs_spacing") return detail::hopping_vs_spacing(spec);
    if (n == "power_budget") return detail::power_budget_scenario(spec);
    return detail::floquet_oracle(spec);
}

double run_and_write(const RunSpec& spec) {
    namespace fs = std::filesystem;
    const auto t0 = std::chrono::steady_clock::now();
    const ScenarioOutput out = run(spec);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::error_code ec;
    fs::create_directories(spec.out, ec);
    if (ec) throw ConfigError("out: cannot create directory '" + spec.out + "': " + ec.message());
    auto write = [&](const std::string& name, const std::string& text) {
        std::ofstream f(fs::path(spec.out) / name, std::ios::binary);
        if (!f) throw ConfigError("out: cannot write '" + name + "'");
        f << text;
    };
    nlohmann::json files = nlohmann::json::array();
    for (const auto& [name, text] : out.files) {
        write(name, text);
        files.push_back(name);
    }
    write("summary.json", out.summary.dump(2) + "\n");
    nlohmann::json manifest = {{"tool", "rydflux"},
                               {"version", version},
                               {"scenario", spec.scenario},
                               {"seed", spec.seed},
                               {"jobs", spec.jobs},
                               {"params", spec.params},
                               {"units", nlohmann::json::object()},
                               {"files", files},
                               {"runtime_s", wall}};
    for (const auto& q : find(spec.scenario).params) manifest["units"][q.key] = q.unit;
    write("manifest.json", manifest.dump(2) + "\n");
    return wall;
}

}  // namespace rydflux::scenarios
