// spectra.hpp — two-body Bloch spectra on a cylinder, bound-state labels, Chern numbers, edge modes
#pragma once

#include "rydflux/basis.hpp"
#include "rydflux/core.hpp"
#include "rydflux/dynamics.hpp"
#include "rydflux/effective.hpp"

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace rydflux {

// Harper-Hofstadter cylinder: open in x (lx columns), translation invariant in y.
// Landau gauge: <(x, y+1)|H|(x, y)> = jy exp(i flux x), <(x+1, y)|H|(x, y)> = jx.
struct CylinderModel {
    int lx{9};
    double jx{1.0};
    double jy{1.0};
    double flux{0.0};
    // Density interaction V(|dx|, |dy|): overrides first, else c6 / r^6 with lattice spacings.
    std::map<std::pair<int, int>, double> v_override;
    double c6{0.0};
    double dx_um{1.0};
    double dy_um{1.0};
    double v_cutoff{1e-3};      // |V| below v_cutoff * |jx| is dropped
    int r_max{12};              // relative-coordinate cutoff (infinite y)
    int ly{0};                  // 0: infinite y; odd > 0: periodic ring of ly sites
    bool hard_core{true};
    double onsite_u{0.0};       // double occupancy energy (soft-core only)
};

void check_cylinder(const CylinderModel& m);
double cylinder_interaction(const CylinderModel& m, int dx, int dy);

// Single-particle Bloch Hamiltonian (lx x lx) at y-momentum k.
Eigen::MatrixXcd single_particle_bloch(const CylinderModel& m, double k);

// Ordered two-excitation states (x1, x2, r): r > 0, or r = 0 with x1 < x2 (x1 <= x2 soft-core).
// The Bloch state is sum_Y exp(i K Y) |(x1, Y), (x2, Y + r)>, Y = y of the first excitation.
struct TwoBodyBasis {
    int lx{0};
    int r_range{0};
    std::vector<std::array<int, 3>> states;
    std::vector<int> table;                  // (r * lx + x1) * lx + x2 -> index or -1
    long index(int x1, int x2, int r) const;
    std::size_t dim() const { return states.size(); }
};

TwoBodyBasis make_two_body_basis(const CylinderModel& m);

// K-resolved two-excitation Hamiltonian; strictly 2 pi periodic in K.
Eigen::MatrixXcd build_two_body_bloch(const CylinderModel& m, const TwoBodyBasis& basis, double k);

struct BlochSpectrum {
    std::vector<double> k;
    std::vector<Eigen::VectorXd> energies;       // ascending per K
    std::vector<Eigen::MatrixXcd> vectors;       // columns per K (empty if not stored)
    std::shared_ptr<const TwoBodyBasis> basis;
    double r_max_change{0.0};                    // max bound-state energy change r_max -> r_max + 2
    bool convergence_checked{false};
};

// Uniform grid of n points over [0, 2 pi) (endpoint excluded) or [0, 2 pi] with endpoint.
std::vector<double> k_grid(int n, bool include_endpoint = true);

// Sweeps K; with check_convergence the cutoff is raised by 2 and bound energies compared (tolerance 1e-3 |jx|).
BlochSpectrum sweep_spectrum(const CylinderModel& m, const std::vector<double>& ks, bool store_vectors = true,
                             int jobs = 1, bool check_convergence = false);

// Two-particle continuum envelope [2 min eps, 2 max eps] of the V = 0 problem.
std::pair<double, double> continuum_envelope(const CylinderModel& m, int n_k = 401);

struct BoundStateLabel {
    enum class Type { I, II, III, scattering };
    Type type{Type::scattering};
    std::pair<int, int> displacement{0, 0};    // dominant (|dx|, |dy|) class
    double displacement_weight{0.0};
    int band{0};                                // eigenvalue index at this K
    int edge_side{0};                           // -1 left, +1 right, 0 bulk
    double edge_score{0.0};                     // weight within 2 columns of the nearer boundary
    double energy{0.0};
    double k{0.0};
    bool bound() const { return type != Type::scattering; }
};

std::string to_string(BoundStateLabel::Type t);

struct ClassifyThresholds {
    double displacement{0.8};
    double edge{0.6};
    int edge_columns{2};
};

// Labels per K per eigenstate.
std::vector<std::vector<BoundStateLabel>> classify_states(const BlochSpectrum& s, const CylinderModel& m,
                                                          const ClassifyThresholds& th = {});

// Column density n(x) of an eigenvector (each excitation counted with weight 1/2).
std::vector<double> column_density(const TwoBodyBasis& basis, const Eigen::VectorXcd& v);

// Bloch Hamiltonian on the magnetic Brillouin zone, kx in [0, 2 pi) per magnetic cell, ky in [0, 2 pi).
using BlochFn = std::function<Eigen::MatrixXcd(double kx, double ky)>;

// Hofstadter torus model at flux 2 pi p / q with a q x 1 magnetic cell.
BlochFn hofstadter_torus(double jx, double jy, int p, int q);

// Rational approximation p/q of flux / (2 pi), q <= max_q.
std::pair<int, int> flux_fraction(double flux, int max_q = 64);

struct ChernResult {
    std::vector<int> chern;        // per group, lowest first
    std::vector<double> raw;       // non-rounded sums
    int grid{0};
    double min_gap{0.0};
};

// Lattice field-strength method; groups of band indices (empty: each band alone).
// Grid starts at min_grid and doubles until the integers repeat. Optional random eigenvector rephasing.
ChernResult chern_numbers(const BlochFn& h, const std::vector<std::vector<int>>& groups = {}, int min_grid = 24,
                          int max_grid = 192, std::uint64_t rephase_seed = 0);

// Finite nx x ny lattice (index x + nx y) with the cylinder's hoppings, gauge and interactions.
// Configuration bases cap the lattice at 64 sites; the site-amplitude routines below accept up to 4096.
EffectiveModel finite_lattice(const CylinderModel& m, int nx, int ny, const std::set<int>& vacancies = {});
ArrayGeometry lattice_geometry(int nx, int ny);   // unit spacings, for positions

// Boundary ring in counter-clockwise order starting at (0, 0).
std::vector<int> edge_path(int nx, int ny);

struct PreparedState {
    StateVector state;
    Eigen::VectorXd energies;      // eigenvalues used
    double window_weight{0.0};
    double mean_edge_score{0.0};
};

// Seed for the projection: Gaussian packet of single excitations (pair_offset = {0, 0}) or of pairs
// separated by pair_offset, centered at `center` (lattice units) and restricted to the outer ring.
Eigen::VectorXcd edge_seed(const SectorBasis& basis, int nx, int ny, Position center, double width,
                           std::pair<int, int> pair_offset = {0, 0});

// Superposes eigenstates in [e_lo, e_hi] weighted by edge score and overlap with the seed.
PreparedState prepare_edge_mode(const EffectiveModel& m, int nx, int ny, int sector, double e_lo, double e_hi,
                                const Eigen::VectorXcd& seed, double min_edge_score = 0.5);

struct EdgeTransportResult {
    EvolutionResult evolution;
    std::vector<double> winding_angle;              // unwrapped angle of the density centroid about the center
    std::vector<std::vector<double>> edge_density;  // per snapshot along the edge path
    std::vector<Eigen::MatrixXd> edge_pair_correlation;   // per snapshot, edge path x edge path (sector >= 2)
    std::vector<double> bound_fraction;             // weight on the seed pair displacement (sector 2)
    std::vector<int> path;
};

EdgeTransportResult edge_transport_scenario(const EffectiveModel& m, int nx, int ny, const StateVector& psi0,
                                            const std::vector<double>& times, std::pair<int, int> pair_offset = {0, 0});


// Single excitation as site amplitudes (index x + nx y), for lattices beyond the configuration-basis limit.
struct SitePacket {
    Eigen::VectorXcd amp;
    Eigen::VectorXd energies;
    double mean_edge_score{0.0};
};
SitePacket prepare_site_edge_packet(const EffectiveModel& m, int nx, int ny, double e_lo, double e_hi, Position center,
                                    double width, double min_edge_score = 0.5);
struct SiteTransportResult {
    std::vector<double> times;
    Eigen::MatrixXd populations;                    // times x sites
    std::vector<double> winding_angle;
    std::vector<std::vector<double>> edge_density;
    std::vector<int> path;
};
SiteTransportResult site_edge_transport(const EffectiveModel& m, int nx, int ny, const Eigen::VectorXcd& psi0,
                                        const std::vector<double>& times);
// Weight of a packet on eigenstates inside the bulk gap [gap_lo, gap_hi]: with the defect lattice divided by the
// clean one. Only in-gap (chiral) components are guaranteed to pass a defect; the ratio is the transmitted fraction.
// Amplitude on vacant sites is dropped and the packet renormalized first.
double vacancy_transmission(const EffectiveModel& clean, const EffectiveModel& defect, const Eigen::VectorXcd& amp,
                            double gap_lo, double gap_hi);

// CSV: K, E_0, E_1, ...
std::string bands_csv(const BlochSpectrum& s);
nlohmann::json classification_json(const std::vector<std::vector<BoundStateLabel>>& labels, const ClassifyThresholds& th);

}  // namespace rydflux
