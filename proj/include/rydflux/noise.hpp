// noise.hpp — phase noise, Doppler disorder, Lindblad evolution, jump trajectories and post-selection
#pragma once

#include "rydflux/basis.hpp"
#include "rydflux/core.hpp"
#include "rydflux/dynamics.hpp"
#include "rydflux/effective.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace rydflux {

// Independent stream seed for (seed, index), via splitmix64.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

// Wiener phase paths with Var phi(t) = 4 gamma t, piecewise constant on steps of dt.
// Paths are assigned per mode: one shared path, one per color, or one per (site, color) field.
NoiseRealization sample_phase_noise(double gamma, NoiseSpec::Mode mode, const DressingConfig& cfg, double dt,
                                    std::size_t n_steps, std::uint64_t seed);

// i.i.d. N(0, sigma^2) detuning offsets, one per site.
std::vector<double> sample_doppler(double sigma, int n_atoms, std::uint64_t seed);

struct RamseyResult {
    std::vector<double> times;
    std::vector<double> coherence;        // ensemble mean of 2 P_r - 1
    std::vector<double> stderr_;
    std::vector<double> analytic;         // exp(-sigma^2 t^2 / 2)
    double one_over_e_time{0.0};          // simulated, interpolated
    double analytic_one_over_e_time{0.0}; // sqrt(2) / sigma
};

// Single-atom Ramsey sequence (ideal pi/2 pulses, free precession under a quenched Doppler offset).
RamseyResult ramsey(double sigma, const std::vector<double>& times, int n_runs, std::uint64_t seed);

// Dense Hamiltonian H(t) on a basis; static models ignore t.
using HamiltonianFn = std::function<void(double t, Eigen::MatrixXcd& h)>;

// H_full(t) = sum_fields (Omega/2 e^{i((Delta + s) t + phi)} sigma+ + h.c.) + sum V n n on `basis`.
HamiltonianFn full_hamiltonian(const ArrayGeometry& g, const DressingConfig& cfg, const InteractionLaw& law,
                               const SectorBasis& basis, double* norm_bound = nullptr);
// Time-independent effective Hamiltonian on `basis` (number conserving, any union of sectors).
HamiltonianFn static_hamiltonian(const Eigen::MatrixXcd& h);

struct JumpOperator {
    double rate{0.0};
    Eigen::MatrixXcd op;
    std::string name;
};

// S_z = sum_i sigma_z^i (no factor 1/2).
Eigen::MatrixXcd collective_sz(const SectorBasis& basis);
// sigma_z^i per active site.
std::vector<JumpOperator> local_dephasing(const SectorBasis& basis, double gamma);
// sigma_gr^i = |g><r|_i per active site; requires the basis to contain the lowered states.
std::vector<JumpOperator> decay_operators(const SectorBasis& basis, double kappa);

// L[ops] rho without the Hamiltonian part.
Eigen::MatrixXcd dissipator(const std::vector<JumpOperator>& ops, const Eigen::MatrixXcd& rho);

struct OpenSystemResult {
    std::vector<double> times;
    Eigen::MatrixXd populations;          // times x sites
    Eigen::VectorXd com_x;
    Eigen::MatrixXd excitation_number;    // times x (n_sites + 1), unnormalized
    Eigen::VectorXd trace;
    double max_trace_error{0.0};
    double max_hermiticity_error{0.0};
    double min_eigenvalue{0.0};
    std::vector<Eigen::MatrixXcd> snapshots;
};

struct MasterOptions {
    double max_step{0.0};                 // 0: 0.05 / (norm bound of the generator)
    double positivity_tol{1e-8};
    long max_dim{256};
    bool store_snapshots{false};
    std::vector<double> x_positions;
};

// Fourth-order Runge-Kutta integration of d rho/dt = -i[H(t), rho] + sum_k rate_k D[L_k] rho.
OpenSystemResult master_equation_evolve(const HamiltonianFn& h, double h_norm_bound, const SectorBasis& basis,
                                        const Eigen::MatrixXcd& rho0, const std::vector<JumpOperator>& jumps,
                                        const std::vector<double>& times, const MasterOptions& opt = {});

struct TrajectorySpec {
    enum class Kind { full, effective };
    Kind kind{Kind::full};
    ArrayGeometry geometry;
    DressingConfig config;
    InteractionLaw law;
    Config initial{0};                    // computational basis initial state
    std::vector<double> times;
    NoiseSpec noise;
    std::vector<double> x_positions;      // defaults to site x
    double max_step{0.0};                 // full: integrator step (0 = default); effective: jump-resolution step
};

struct RunRecord {
    std::size_t run{0};
    std::uint64_t seed{0};
    int jumps{0};
    std::vector<double> jump_times;
    std::vector<Config> outcomes;         // projective measurement sampled at each output time
};

struct EnsembleResult {
    std::vector<double> times;
    Eigen::MatrixXd mean_populations, stderr_populations;   // times x sites
    Eigen::VectorXd mean_com_x, stderr_com_x;
    std::vector<RunRecord> runs;
    std::vector<Eigen::MatrixXd> run_populations;           // per run: times x sites
    int n_sites{0};
};

// Stochastic unraveling: phase paths and Doppler offsets per run, decay by first-order jumps.
EnsembleResult trajectory_ensemble(const TrajectorySpec& spec, int n_runs, int jobs = 1);

struct PostSelectionEstimate {
    std::vector<double> times;
    std::vector<double> success_probability, success_stderr;
    std::vector<double> conditional_mean, conditional_stderr;       // over successful runs
    std::vector<double> unconditional_mean, unconditional_stderr;   // over all runs
    std::vector<int> successes;
    int runs{0};
};

// Success: outcome excitation number equals n_r. Observable evaluated on the measured configuration.
PostSelectionEstimate post_select(const EnsembleResult& e, int n_r, const std::function<double(Config)>& observable);

struct DopplerDiagnostics {
    double eigenvalue{0.0};        // +-sqrt(J^2 + Delta_T^2)
    double gamma_eff{0.0};         // Delta_T^2 / J
    double localization_length{0.0};   // J^2 / Delta_T^2, +inf when Delta_T = 0
    double coherence_time{0.0};    // xi / J
    bool unbounded{false};
};

DopplerDiagnostics doppler_scaling_diagnostics(double j, double sigma);

// Envelope decay time of an oscillating signal: log of peak-to-peak contrast per window fitted linearly.
// Returns +inf for a non-decaying envelope.
// With `err` (standard error per sample) a window whose contrast stays inside +-z err is unresolved: the fit
// stops there and uses that window's noise floor, so the result is an upper bound on the damping time.
// NaN when already the first window is unresolved.
double envelope_damping_time(const std::vector<double>& times, const std::vector<double>& signal, double window,
                             const std::vector<double>& err = {}, double z = 3.0);

// CSV: time, mean and stderr per population and x_com.
std::string ensemble_csv(const EnsembleResult& e);
// CSV: run, seed, jumps, final outcome bitstring.
std::string run_log_csv(const EnsembleResult& e);

}  // namespace rydflux
