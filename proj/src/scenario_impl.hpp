// scenario_impl.hpp — shared builders and per-scenario entry points (internal)
#pragma once

#include "rydflux/core.hpp"
#include "rydflux/dynamics.hpp"
#include "rydflux/effective.hpp"
#include "rydflux/scenarios.hpp"

#include <string>
#include <vector>

namespace rydflux::scenarios::detail {

double num(const RunSpec& s, const std::string& key);
int integer(const RunSpec& s, const std::string& key);
bool flag(const RunSpec& s, const std::string& key);
std::vector<double> list(const RunSpec& s, const std::string& key, std::size_t expected = 0);
// Positive number check with a message naming the key.
double positive(const RunSpec& s, const std::string& key);

std::vector<double> linspace(double a, double b, int n);

// C6 fixed by V1 / J_x = 1045 at J_x = 2 pi x 0.5 MHz and d_y = 4.8 um.
double reference_c6();
// V that equalizes |J| of two colors (second-order formula, Omega^2 V / (4 Delta (Delta + V))).
double equal_hopping_interaction(double delta1, double omega1, double delta2, double omega2);
// Pair distance giving interaction v under C6 / r^6.
double spacing_for(double v, double c6);

struct Setup {
    ArrayGeometry geometry;
    DressingConfig config;
    InteractionLaw law;
};

// Equilateral triangle, atoms at x = (0, -R/2, R/2); pairs (0,1), (1,2), (2,0) share colors A, B, C.
// The Peierls phase sits on atom 0's C field; the loop 0 -> 2 -> 1 carries `flux`.
Setup three_atom(const std::vector<double>& detunings_mhz, const std::vector<double>& rabi_mhz, double spacing,
                 double flux, double c6);
// 2 pi / (sqrt3 mean |J|): return time of the three-site chiral cycle.
double chiral_period(const EffectiveModel& m);
// Sites in the order their populations first reach a local maximum above `level` (start site excluded).
std::vector<int> peak_order(const EvolutionResult& r, int start, double level = 0.3);

// CSV with 12 significant digits.
std::string table_csv(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows);

ScenarioOutput two_atom_transfer(const RunSpec& s);
ScenarioOutput crosstalk_sweep(const RunSpec& s);
ScenarioOutput three_atom_chiral(const RunSpec& s);
ScenarioOutput hh_ladder_collision(const RunSpec& s);
ScenarioOutput anisotropic_hh_spectra(const RunSpec& s);
ScenarioOutput edge_transport(const RunSpec& s);
ScenarioOutput phase_noise(const RunSpec& s);
ScenarioOutput doppler(const RunSpec& s);
ScenarioOutput decay_postselect(const RunSpec& s);
ScenarioOutput potential_balance(const RunSpec& s);
ScenarioOutput hopping_vs_spacing(const RunSpec& s);
ScenarioOutput power_budget_scenario(const RunSpec& s);
ScenarioOutput floquet_oracle(const RunSpec& s);

}  // namespace rydflux::scenarios::detail
