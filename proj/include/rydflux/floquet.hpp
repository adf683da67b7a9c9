// floquet.hpp — Fourier decomposition, extended-space Floquet matrix and van Vleck perturbation theory
#pragma once

#include "rydflux/basis.hpp"
#include "rydflux/core.hpp"
#include "rydflux/linalg.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <map>
#include <memory>
#include <string>
#include <vector>

namespace rydflux {

struct ElementaryFrequency {
    double omega{0.0};
    std::vector<long> harmonics;   // Delta_k = harmonics[k] * omega
};

// Largest omega with every detuning an integer multiple (relative tolerance rel_tol).
ElementaryFrequency elementary_frequency(const std::vector<double>& detunings, double rel_tol = 1e-12,
                                         long bound = 1000000);

// H(t) = sum_n H_n exp(i n omega t) on a physical sector basis.
struct FourierHamiltonian {
    double omega{0.0};
    std::map<std::string, long> color_harmonic;   // n_Theta (no site offsets)
    std::map<long, linalg::SpMat> blocks;
    std::shared_ptr<const SectorBasis> basis;
};

FourierHamiltonian fourier_decompose(const DressingConfig& cfg, const InteractionLaw& law, const ArrayGeometry& g,
                                     std::shared_ptr<const SectorBasis> basis);

struct FloquetMatrix {
    int n_max{0};
    double omega{0.0};
    std::shared_ptr<const SectorBasis> basis;
    std::vector<int> sectors;
    linalg::SpMat h;                 // full extended-space matrix
    linalg::SpMat drive;             // off-diagonal (perturbation) part
    Eigen::VectorXd unperturbed;     // E_alpha + n omega
    // Inputs kept for truncation-convergence rebuilds.
    DressingConfig config;
    InteractionLaw law;
    ArrayGeometry geometry;

    long dim() const { return static_cast<long>(unperturbed.size()); }
    long index(long alpha, int n) const { return (static_cast<long>(n) + n_max) * static_cast<long>(basis->dim()) + alpha; }
    long physical(long idx) const { return idx % static_cast<long>(basis->dim()); }
    int fourier(long idx) const { return static_cast<int>(idx / static_cast<long>(basis->dim())) - n_max; }
};

// sectors: excitation numbers (0 = ground, 1 = Pi1, ...). n_max < 0 selects 2 * max harmonic.
FloquetMatrix build_sector_floquet(const DressingConfig& cfg, const InteractionLaw& law, const ArrayGeometry& g,
                                   const std::vector<int>& sectors, int n_max = -1);

struct QuasienergyResult {
    Eigen::VectorXd values;      // ascending, inside window
    Eigen::MatrixXcd vectors;    // columns, extended basis
    double convergence{0.0};     // max change of window eigenvalues under n_max -> n_max + 2
    bool checked{false};
};

// Eigenpairs with quasienergy in [lo, hi]. If check_tol > 0 the truncation is re-run at n_max + 2 and a
// NumericalError is thrown when any window eigenvalue moves by more than check_tol.
QuasienergyResult quasienergies(const FloquetMatrix& f, double lo, double hi, double check_tol = -1.0);

struct GvvResult {
    int order{0};
    std::vector<long> block;             // extended-basis indices
    Eigen::MatrixXcd h0;                 // zeroth order (diagonal)
    Eigen::MatrixXcd h1, h2, h3;         // order contributions (h3 only if order == 3)
    Eigen::MatrixXcd effective;          // h0 + h1 + ... up to `order`
    Eigen::MatrixXcd correction;         // first-order state amplitudes, rows = extended basis, cols = block
    double overlap_term{0.0};            // max |<Psi0|Psi1>| entry (zero for orthogonal correction)
    double anti_hermitian{0.0};          // max |H2 - H2^dagger| / 2
    double gap_ratio{0.0};               // intra-block spread / min gap to coupled complement
};

GvvResult gvv_effective(const FloquetMatrix& f, const std::vector<long>& block, int order, double max_gap_ratio = 0.1);

// Extended indices of all states of excitation number `sector` at Fourier index n.
std::vector<long> sector_block(const FloquetMatrix& f, int sector, int n = 0);

// CSV: block_row, block_col, harmonic, nnz.
std::string block_structure_csv(const FloquetMatrix& f);

}  // namespace rydflux
