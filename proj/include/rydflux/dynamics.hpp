// dynamics.hpp — exact driven evolution, effective-model evolution and observables
#pragma once

#include "rydflux/basis.hpp"
#include "rydflux/core.hpp"
#include "rydflux/effective.hpp"
#include "rydflux/linalg.hpp"

#include <Eigen/Dense>

#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace rydflux {

// Phase paths and static detuning offsets for one noisy realization.
// paths[k][m] is phi on [m*dt, (m+1)*dt); the last value is held beyond the grid.
struct NoiseRealization {
    double dt{0.0};
    NoiseSpec::Mode mode{NoiseSpec::Mode::global};
    std::vector<std::vector<double>> paths;
    std::map<std::pair<int, int>, int> field_path;   // (site, color index) -> path index
    std::vector<double> doppler;                     // per site, rad/us (empty = none)
    std::uint64_t seed{0};

    double phase(int site, int color, double t) const;
};

struct EvolutionResult {
    std::vector<double> times;
    Eigen::MatrixXd populations;        // times x sites, <n_i>
    Eigen::VectorXd com_x;              // sum_i x_i <n_i>
    Eigen::MatrixXd excitation_number;  // times x (n_sites + 1), P(N_r = k), normalized
    Eigen::VectorXd norm;               // ||psi||
    std::vector<std::pair<int, int>> correlator_pairs;
    Eigen::MatrixXd correlators;        // times x pairs, <n_i n_j>
    std::vector<Eigen::VectorXcd> snapshots;
    std::shared_ptr<const SectorBasis> basis;
    double max_norm_drift{0.0};
    double band_edge_weight{0.0};       // max weight on the outermost sectors of a band basis
    double step{0.0};                   // integrator step (exact evolution), us
};

struct EvolveOptions {
    SectorBasis::Mode basis_mode{SectorBasis::Mode::full};
    int band_center{1};                 // N_r^0 for band mode, N_r for fixed mode
    int band_width{2};                  // k for band mode
    double max_step{0.0};               // 0: 2 pi / (40 omega_max)
    bool richardson{false};             // repeat with h/2 and compare final populations
    double richardson_tol{1e-6};
    double leakage_threshold{1e-3};     // band-edge weight that aborts a band-truncated run
    double decay_rate{0.0};             // no-jump decay -i kappa/2 N_r (norm not conserved)
    bool store_snapshots{false};
    std::vector<std::pair<int, int>> correlators;
};

// Fixed-step fourth-order (Yoshida) composition of Strang splittings of the exact H(t):
// diagonal interaction phases exactly, per-site drive rotations exactly at substep midpoints.
// Caches the diagonal factors of the last step size, so one instance must not be stepped from two threads.
class FullPropagator {
public:
    FullPropagator(const ArrayGeometry& g, const DressingConfig& cfg, const InteractionLaw& law,
                   std::shared_ptr<const SectorBasis> basis, double decay_rate = 0.0,
                   const NoiseRealization* noise = nullptr);

    // Advance psi from t to t + h.
    void step(Eigen::VectorXcd& psi, double t, double h) const;
    // Largest frequency in the problem: max|Delta + s| + max pair |V|.
    double omega_max() const noexcept { return omega_max_; }
    double default_step() const noexcept { return two_pi / (40.0 * omega_max_); }
    const Eigen::VectorXd& diagonal() const noexcept { return energy_; }
    const std::shared_ptr<const SectorBasis>& basis() const noexcept { return basis_; }

private:
    struct Field {
        int site;
        int color;
        cplx half_rabi;
        double detuning;   // includes site shift and Doppler offset
        const std::vector<double>* path{nullptr};   // phase-noise path, if any
    };
    void apply_diagonal(Eigen::VectorXcd& psi, const Eigen::VectorXcd& factor) const;
    void diagonal_factor(Eigen::VectorXcd& factor, double tau) const;
    void apply_drive(Eigen::VectorXcd& psi, double t, double tau) const;

    std::shared_ptr<const SectorBasis> basis_;
    std::vector<Field> fields_;
    std::vector<int> drive_sites_;
    std::vector<std::vector<std::pair<int, int>>> pairs_;   // per drive site: (ground idx, excited idx); empty = bit kernel
    bool bit_kernel_{false};
    Eigen::VectorXd energy_;
    Eigen::VectorXd excitations_;
    double decay_{0.0};
    double omega_max_{0.0};
    const NoiseRealization* noise_{nullptr};
    mutable double cached_h_{0.0};
    mutable Eigen::VectorXcd outer_factor_, inner_factor_;
};

// Exact evolution of i d/dt psi = H_full(t) psi; observables recorded at `times` (first = start time).
EvolutionResult evolve_full(const ArrayGeometry& g, const DressingConfig& cfg, const InteractionLaw& law,
                            const StateVector& psi0, const std::vector<double>& times, const EvolveOptions& opt = {},
                            const NoiseRealization* noise = nullptr);

// Number-conserving sector Hamiltonian of the effective model (hard-core bosons).
linalg::SpMat effective_hamiltonian(const EffectiveModel& m, const SectorBasis& basis);

struct EffectiveOptions {
    long max_dim{2000000};
    long dense_limit{2000};
    double decay_rate{0.0};             // no-jump factor exp(-kappa N_r t / 2)
    bool store_snapshots{false};
    std::vector<std::pair<int, int>> correlators;
    std::vector<double> x_positions;    // for com_x; empty gives com_x = 0
};

EvolutionResult evolve_effective(const EffectiveModel& m, const StateVector& psi0, const std::vector<double>& times,
                                 int n_r, const EffectiveOptions& opt = {});

// Observable extraction shared by all evolution paths.
// Allocates result arrays for n_times rows.
void init_result(EvolutionResult& r, const std::vector<double>& times, int n_sites,
                 const std::vector<std::pair<int, int>>& correlators);
void record_observables(EvolutionResult& r, std::size_t row, const Eigen::VectorXcd& psi, const SectorBasis& basis,
                        const std::vector<double>& x_positions);

struct Discrepancy {
    double max_l1{0.0};
    double mean_l1{0.0};
    std::map<std::string, double> max_deviation;   // per observable column
};

Discrepancy compare_runs(const EvolutionResult& a, const EvolutionResult& b);

// <n_i n_j>; i == j returns 0 and sets *flagged.
double two_body_correlator(const StateVector& s, int i, int j, bool* flagged = nullptr);

// sum_{i in region} x_i P_i / sum_{i in region} P_i per time (NaN when the region is empty of weight).
std::vector<double> region_com(const EvolutionResult& r, const std::vector<double>& x, const std::vector<int>& region);

// Re-express a state in another basis; throws if weight falls outside it.
Eigen::VectorXcd embed(const StateVector& s, const SectorBasis& target, double tol = 1e-12);

// CSV: time, P_i..., x_com, N_k..., norm, corr_i_j...
std::string evolution_csv(const EvolutionResult& r);

}  // namespace rydflux
