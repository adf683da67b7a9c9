// linalg.hpp — Krylov propagation and shift-invert Lanczos for Hermitian operators
#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <complex>
#include <functional>

namespace rydflux::linalg {

using SpMat = Eigen::SparseMatrix<std::complex<double>>;
using MatVec = std::function<void(const Eigen::VectorXcd&, Eigen::VectorXcd&)>;

// Applies exp(-i H t) to v by Lanczos with adaptive substeps; local error per substep below tol.
Eigen::VectorXcd expm_krylov(const MatVec& apply, const Eigen::VectorXcd& v, double t, double norm_estimate,
                             double tol = 1e-12, int krylov_dim = 30);

struct EigenPairs {
    Eigen::VectorXd values;     // ascending
    Eigen::MatrixXcd vectors;   // columns
};

// Dense Hermitian eigensolver (full spectrum).
EigenPairs eigh(const Eigen::MatrixXcd& h, bool vectors = true);

// k eigenpairs of Hermitian h closest to sigma (shift-invert Lanczos, full reorthogonalization).
EigenPairs eigs_near(const SpMat& h, double sigma, int k, double tol = 1e-10);

// Upper bound on the spectral radius of a sparse Hermitian matrix (max absolute row sum).
double norm_bound(const SpMat& h);

}  // namespace rydflux::linalg
