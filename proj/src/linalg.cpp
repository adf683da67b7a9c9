// linalg.cpp — Krylov propagation and shift-invert Lanczos
#include "rydflux/linalg.hpp"
#include "rydflux/core.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace rydflux::linalg {

namespace {

// Lanczos with full reorthogonalization; returns basis columns and tridiagonal (alpha, beta).
int lanczos(const MatVec& apply, const Eigen::VectorXcd& v0, int m, Eigen::MatrixXcd& q, std::vector<double>& alpha,
            std::vector<double>& beta) {
    const Eigen::Index n = v0.size();
    m = static_cast<int>(std::min<Eigen::Index>(m, n));
    q.resize(n, m + 1);
    alpha.assign(m, 0.0);
    beta.assign(m, 0.0);
    q.col(0) = v0 / v0.norm();
    Eigen::VectorXcd w(n);
    for (int j = 0; j < m; ++j) {
        apply(q.col(j), w);
        alpha[j] = q.col(j).dot(w).real();
        for (int pass = 0; pass < 2; ++pass)
            for (int i = 0; i <= j; ++i) w -= q.col(i) * q.col(i).dot(w);
        beta[j] = w.norm();
        if (beta[j] < 1e-13 * (std::abs(alpha[j]) + 1.0)) {
            beta[j] = 0.0;
            return j + 1;
        }
        q.col(j + 1) = w / beta[j];
    }
    return m;
}

Eigen::MatrixXd tridiag(const std::vector<double>& a, const std::vector<double>& b, int m) {
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
        t(i, i) = a[i];
        if (i + 1 < m) t(i, i + 1) = t(i + 1, i) = b[i];
    }
    return t;
}

}  // namespace

Eigen::VectorXcd expm_krylov(const MatVec& apply, const Eigen::VectorXcd& v, double t, double norm_estimate,
                             double tol, int krylov_dim) {
    Eigen::VectorXcd out = v;
    if (t == 0.0 || v.norm() == 0.0) return out;
    double remaining = t;
    double dt = std::min(std::abs(t), 8.0 / std::max(norm_estimate, 1e-300)) * (t > 0 ? 1.0 : -1.0);
    Eigen::MatrixXcd q;
    std::vector<double> alpha, beta;
    while (std::abs(remaining) > 0.0) {
        if (std::abs(dt) > std::abs(remaining)) dt = remaining;
        const double nrm = out.norm();
        const int m = lanczos(apply, out, krylov_dim, q, alpha, beta);
        const Eigen::MatrixXd tm = tridiag(alpha, beta, m);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(tm);
        bool accepted = false;
        for (int attempt = 0; attempt < 60 && !accepted; ++attempt) {
            Eigen::VectorXcd c(m);
            for (int i = 0; i < m; ++i)
                c(i) = std::exp(std::complex<double>(0.0, -es.eigenvalues()(i) * dt)) * es.eigenvectors()(0, i);
            Eigen::VectorXcd y = es.eigenvectors().cast<std::complex<double>>() * c;
            const double err = (m < krylov_dim || beta[m - 1] == 0.0) ? 0.0 : std::abs(beta[m - 1] * y(m - 1)) * nrm;
            if (err <= tol * std::max(1.0, std::abs(dt)) || std::abs(dt) < 1e-300) {
                out = nrm * (q.leftCols(m) * y);
                remaining -= dt;
                if (err < 0.1 * tol) dt *= 1.5;
                accepted = true;
            } else {
                dt *= 0.5;
            }
        }
        if (!accepted) throw NumericalError("expm_krylov: step control failed");
    }
    return out;
}

EigenPairs eigh(const Eigen::MatrixXcd& h, bool vectors) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericalError("eigh: eigensolver failed");
    EigenPairs r;
    r.values = es.eigenvalues();
    if (vectors) r.vectors = es.eigenvectors();
    return r;
}

double norm_bound(const SpMat& h) {
    Eigen::VectorXd rows = Eigen::VectorXd::Zero(h.rows());
    for (int k = 0; k < h.outerSize(); ++k)
        for (SpMat::InnerIterator it(h, k); it; ++it) rows(it.row()) += std::abs(it.value());
    return rows.size() ? rows.maxCoeff() : 0.0;
}

EigenPairs eigs_near(const SpMat& h, double sigma, int k, double tol) {
    const Eigen::Index n = h.rows();
    if (n == 0) return {};
    k = static_cast<int>(std::min<Eigen::Index>(k, n));
    SpMat shifted = h;
    for (Eigen::Index i = 0; i < n; ++i) shifted.coeffRef(i, i) -= sigma;
    shifted.makeCompressed();
    Eigen::SparseLU<SpMat> lu;
    lu.compute(shifted);
    if (lu.info() != Eigen::Success) {
        // sigma hit an eigenvalue; nudge it
        const double eps = 1e-9 * (1.0 + norm_bound(h));
        for (Eigen::Index i = 0; i < n; ++i) shifted.coeffRef(i, i) -= eps;
        lu.compute(shifted);
        if (lu.info() != Eigen::Success) throw NumericalError("eigs_near: factorization failed");
    }

    // Locked (converged) vectors are projected out of every Krylov step so repeated
    // eigenvalues are found one copy per restart.
    std::vector<std::pair<double, Eigen::VectorXcd>> locked;
    auto project = [&locked](Eigen::VectorXcd& w) {
        for (const auto& [lam, x] : locked) w -= x * x.dot(w);
    };
    MatVec op = [&](const Eigen::VectorXcd& x, Eigen::VectorXcd& y) {
        y = lu.solve(x);
        project(y);
    };

    Eigen::VectorXcd v0(n);
    for (Eigen::Index i = 0; i < n; ++i)
        v0(i) = std::complex<double>(1.0 + 0.37 * std::sin(1.3 * i), 0.21 * std::cos(0.7 * i));

    int m = static_cast<int>(std::min<Eigen::Index>(n, std::max(2 * k + 20, 60)));
    int stalls = 0;
    while (static_cast<int>(locked.size()) < k) {
        const Eigen::Index free_dim = n - static_cast<Eigen::Index>(locked.size());
        Eigen::VectorXcd start = v0;
        project(start);
        if (start.norm() < 1e-12) break;
        Eigen::MatrixXcd q;
        std::vector<double> alpha, beta;
        const int mm = lanczos(op, start, static_cast<int>(std::min<Eigen::Index>(m, free_dim)), q, alpha, beta);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(tridiag(alpha, beta, mm));
        std::vector<int> idx(mm);
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(),
                  [&](int a, int b) { return std::abs(es.eigenvalues()(a)) > std::abs(es.eigenvalues()(b)); });
        int accepted = 0;
        for (int t = 0; t < mm && static_cast<int>(locked.size()) < k; ++t) {
            Eigen::VectorXcd x = q.leftCols(mm) * es.eigenvectors().col(idx[t]).cast<std::complex<double>>();
            project(x);
            if (x.norm() < 1e-8) continue;
            x.normalize();
            Eigen::VectorXcd hx = h * x;
            const double lam = x.dot(hx).real();
            if ((hx - lam * x).norm() > tol * (1.0 + std::abs(lam))) break;   // keep ordering: stop at first unconverged
            locked.emplace_back(lam, x);
            ++accepted;
        }
        if (accepted == 0) {
            if (m >= free_dim || ++stalls > 6) throw NumericalError("eigs_near: Lanczos did not converge");
            m = static_cast<int>(std::min<Eigen::Index>(free_dim, 2 * m));
        }
    }
    std::sort(locked.begin(), locked.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    EigenPairs r;
    r.values.resize(static_cast<Eigen::Index>(locked.size()));
    r.vectors.resize(n, static_cast<Eigen::Index>(locked.size()));
    for (std::size_t t = 0; t < locked.size(); ++t) {
        r.values(static_cast<Eigen::Index>(t)) = locked[t].first;
        r.vectors.col(static_cast<Eigen::Index>(t)) = locked[t].second;
    }
    return r;
}

}  // namespace rydflux::linalg
