// effective.hpp — second-order effective hopping models, flux, balancing, doublons, power budget
#pragma once

#include "rydflux/core.hpp"

#include <Eigen/Dense>

#include <json.hpp>

#include <string>
#include <vector>

namespace rydflux {

struct EffectiveModel {
    int n_sites{0};
    Eigen::MatrixXcd hopping;           // J_ij = <i|H|j>, Hermitian, zero diagonal
    Eigen::VectorXd potential;          // mu_i
    Eigen::MatrixXd density_interaction;  // V_ij, symmetric, zero diagonal
    std::vector<int> vacancies;

    bool vacant(int i) const;
};

// J_ij for channel `color`: Omega_i conj(Omega_j) V / (4 Delta (Delta + V)).
// With per-site detuning offsets the two second-order paths are averaged so J_ij = conj(J_ji).
cplx hopping_strength(const DressingConfig& cfg, const InteractionLaw& law, const ArrayGeometry& g, int i, int j,
                      const std::string& color);

// Light-shift formula: sum_Theta_i |Omega_i|^2/4Delta - sum_{j != i} |Omega_j|^2/4(Delta_j + V_ij).
double chemical_potential(const DressingConfig& cfg, const InteractionLaw& law, const ArrayGeometry& g, int i);

// On-site energy entering the effective model: chemical_potential + s_i (site detuning offset).
double onsite_energy(const DressingConfig& cfg, const InteractionLaw& law, const ArrayGeometry& g, int i);

EffectiveModel build_effective_model(const DressingConfig& cfg, const InteractionLaw& law, const ArrayGeometry& g);

struct FluxResult {
    double wrapped{0.0};   // (-pi, pi]
    double raw{0.0};       // plain sum of arguments
};

// Sum of arg J_{next,current} around the cycle (last site connects back to first).
FluxResult plaquette_flux(const EffectiveModel& m, const std::vector<int>& loop);

double wrap_angle(double a);   // to (-pi, pi]

struct BalanceResult {
    std::vector<double> delta;     // mu_i - mu_ref before balancing, accumulated (potential shift per site)
    DressingConfig config;         // detunings updated
    int iterations{0};
    double residual{0.0};          // max |mu'_i - mu'_ref|
};

// Equalizes on-site energies to that of reference_site by shifting all detunings on each site.
BalanceResult balance_potentials(const DressingConfig& cfg, const InteractionLaw& law, const ArrayGeometry& g,
                                 int reference_site, double tol = -1.0, int max_iter = 100);

// Exchange of excitation k -> j next to a pinned excitation i.
cplx dimer_hop(const DressingConfig& cfg, const InteractionLaw& law, const ArrayGeometry& g, int pinned, int from,
               int to, const std::string& color, double degeneracy_tol = 1.0);

struct DoublonModel {
    double com_hopping_x{0.0};
    double com_hopping_y{0.0};
    double com_flux{0.0};        // wrapped to (-pi, pi]
    double com_flux_raw{0.0};    // 2 Phi
    double d1{0.0}, d2{0.0}, d3{0.0};
};

DoublonModel doublon_com_model(double jx, double jy, double phi, double d1, double d2, double d3);

struct ColorScheme {
    int n_colors{4};               // detuning ladder Delta + k delta, k = 0..n-1
    double bitflip_constant{2.0};  // Delta = J (2/eps_b) * constant
};

struct PowerBudget {
    double beam_waist{0.0};        // um
    int site_count{0};
    double effective_dipole{0.0};  // units of e*a0
    double alpha{0.0};
    double detuning{0.0};          // implied Delta, rad/us
    double color_gap{0.0};         // implied delta, rad/us
    std::vector<double> rabi;      // Omega_Theta, rad/us
    std::vector<double> intensity; // I_Theta, W/m^2
    double total_power{0.0};       // W, sum over colors
    double total_power_closed_form{0.0};  // W, direct formula
};

inline constexpr double fine_structure = 7.2973525693e-3;

PowerBudget power_budget(double j, double eps_b, double eps_c, double w0_um, int n_sites, double d_eff_ea0,
                         double alpha = fine_structure, const ColorScheme& scheme = {});

nlohmann::json to_json(const EffectiveModel& m);
EffectiveModel effective_model_from_json(const nlohmann::json& j);

// CSV rows i,j,|J|,arg J for nonzero hoppings (i<j).
std::string hopping_table_csv(const EffectiveModel& m);

}  // namespace rydflux
