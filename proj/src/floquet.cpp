// floquet.cpp — Floquet matrix assembly, quasienergies and GVV perturbation theory
#include "rydflux/floquet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace rydflux {

namespace {

struct Fraction {
    long p{0}, q{1};
};

// Continued-fraction rationalization of x to relative accuracy rel_tol with denominators <= bound.
Fraction rationalize(double x, double rel_tol, long bound) {
    const double target = std::abs(x);
    long h0 = 1, h1 = 0;   // numerators
    long k0 = 0, k1 = 1;   // denominators
    double r = target;
    for (int it = 0; it < 64; ++it) {
        const double a_d = std::floor(r);
        if (a_d > 4.0e18) break;
        const long a = static_cast<long>(a_d);
        const long h2 = a * h0 + h1;
        const long k2 = a * k0 + k1;
        if (k2 > bound || h2 > bound * 64) break;
        h1 = h0;
        h0 = h2;
        k1 = k0;
        k0 = k2;
        if (std::abs(target - static_cast<double>(h0) / static_cast<double>(k0)) <= rel_tol * target)
            return {x < 0 ? -h0 : h0, k0};
        const double frac = r - a_d;
        if (frac <= 0.0) break;
        r = 1.0 / frac;
    }
    throw std::invalid_argument("elementary_frequency: detunings incommensurate at the requested tolerance/bound");
}

}  // namespace

ElementaryFrequency elementary_frequency(const std::vector<double>& detunings, double rel_tol, long bound) {
    if (detunings.empty()) throw std::invalid_argument("elementary_frequency: empty detuning list");
    for (double d : detunings)
        if (!std::isfinite(d) || d == 0.0) throw std::invalid_argument("elementary_frequency: zero detuning");
    const double ref = detunings[0];
    std::vector<Fraction> fr;
    long lcm = 1;
    for (double d : detunings) {
        const Fraction f = rationalize(d / ref, rel_tol, bound);
        fr.push_back(f);
        lcm = std::lcm(lcm, f.q);
        if (lcm > bound) throw std::invalid_argument("elementary_frequency: harmonic bound exceeded");
    }
    std::vector<long> n;
    long g = 0;
    for (const auto& f : fr) {
        const long v = f.p * (lcm / f.q);
        n.push_back(v);
        g = std::gcd(g, std::abs(v));
    }
    ElementaryFrequency out;
    for (long& v : n) {
        v /= g;
        if (std::abs(v) > bound) throw std::invalid_argument("elementary_frequency: harmonic bound exceeded");
    }
    if (ref < 0)
        for (long& v : n) v = -v;
    out.omega = std::abs(ref) / std::abs(static_cast<double>(n[0]));
    out.harmonics = n;
    return out;
}

namespace {

double config_energy(Config c, const Eigen::MatrixXd& v, const std::vector<int>& active) {
    double e = 0.0;
    for (std::size_t a = 0; a < active.size(); ++a) {
        if (!(c >> active[a] & 1ULL)) continue;
        for (std::size_t b = a + 1; b < active.size(); ++b)
            if (c >> active[b] & 1ULL) e += v(active[a], active[b]);
    }
    return e;
}

Eigen::MatrixXd interaction_matrix(const ArrayGeometry& g, const InteractionLaw& law) {
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(g.size(), g.size());
    const auto act = g.active_sites();
    for (std::size_t a = 0; a < act.size(); ++a)
        for (std::size_t b = a + 1; b < act.size(); ++b)
            v(act[a], act[b]) = v(act[b], act[a]) = pair_interaction(g, law, act[a], act[b]);
    return v;
}

struct DriveTerm {
    int site;
    cplx half_rabi;
    long harmonic;
};

// Drive terms with their integer harmonics, including per-site detuning offsets.
std::vector<DriveTerm> drive_terms(const DressingConfig& cfg, double& omega, std::map<std::string, long>& color_h) {
    std::vector<double> dets;
    std::vector<std::pair<int, int>> terms;   // (color, site)
    for (std::size_t c = 0; c < cfg.colors.size(); ++c) dets.push_back(cfg.colors[c].detuning);
    for (std::size_t c = 0; c < cfg.colors.size(); ++c)
        for (const auto& [site, om] : cfg.colors[c].rabi) {
            terms.emplace_back(static_cast<int>(c), site);
            dets.push_back(cfg.detuning(static_cast<int>(c), site));
        }
    const auto ef = elementary_frequency(dets);
    omega = ef.omega;
    for (std::size_t c = 0; c < cfg.colors.size(); ++c) color_h[cfg.colors[c].label] = ef.harmonics[c];
    std::vector<DriveTerm> out;
    for (std::size_t t = 0; t < terms.size(); ++t) {
        const auto [c, site] = terms[t];
        out.push_back({site, 0.5 * cfg.rabi(c, site), ef.harmonics[cfg.colors.size() + t]});
    }
    return out;
}

}  // namespace

FourierHamiltonian fourier_decompose(const DressingConfig& cfg, const InteractionLaw& law, const ArrayGeometry& g,
                                     std::shared_ptr<const SectorBasis> basis) {
    FourierHamiltonian fh;
    fh.basis = basis;
    const auto terms = drive_terms(cfg, fh.omega, fh.color_harmonic);
    const auto v = interaction_matrix(g, law);
    const long d = static_cast<long>(basis->dim());
    std::map<long, std::vector<Eigen::Triplet<cplx>>> trip;
    for (long a = 0; a < d; ++a) {
        const Config c = basis->state(a);
        trip[0].emplace_back(a, a, config_energy(c, v, basis->active_sites()));
        for (const auto& t : terms) {
            if (c >> t.site & 1ULL) continue;
            const long b = basis->index(c | (1ULL << t.site));
            if (b < 0) continue;
            trip[t.harmonic].emplace_back(b, a, t.half_rabi);
            trip[-t.harmonic].emplace_back(a, b, std::conj(t.half_rabi));
        }
    }
    for (auto& [n, tr] : trip) {
        linalg::SpMat m(d, d);
        m.setFromTriplets(tr.begin(), tr.end());
        fh.blocks[n] = std::move(m);
    }
    return fh;
}

FloquetMatrix build_sector_floquet(const DressingConfig& cfg, const InteractionLaw& law, const ArrayGeometry& g,
                                   const std::vector<int>& sectors, int n_max) {
    FloquetMatrix f;
    f.config = cfg;
    f.law = law;
    f.geometry = g;
    f.sectors = sectors;
    f.basis = std::make_shared<SectorBasis>(SectorBasis::sectors(g.size(), sectors, g.vacancies));
    std::map<std::string, long> color_h;
    const auto terms = drive_terms(cfg, f.omega, color_h);
    long max_h = 0;
    for (const auto& t : terms) max_h = std::max(max_h, std::abs(t.harmonic));
    if (n_max < 0) n_max = static_cast<int>(2 * std::max(max_h, 1L));
    if (n_max < max_h)
        throw std::invalid_argument("build_sector_floquet: truncation N_max = " + std::to_string(n_max) +
                                    " below largest harmonic " + std::to_string(max_h));
    f.n_max = n_max;

    const auto v = interaction_matrix(g, law);
    const long d = static_cast<long>(f.basis->dim());
    const long nb = 2L * n_max + 1;
    f.unperturbed.resize(d * nb);
    std::vector<double> e(d);
    for (long a = 0; a < d; ++a) e[a] = config_energy(f.basis->state(a), v, f.basis->active_sites());

    std::vector<Eigen::Triplet<cplx>> dtrip, htrip;
    for (int n = -n_max; n <= n_max; ++n)
        for (long a = 0; a < d; ++a) {
            const long idx = f.index(a, n);
            f.unperturbed(idx) = e[a] + n * f.omega;
            htrip.emplace_back(idx, idx, f.unperturbed(idx));
        }
    for (long a = 0; a < d; ++a) {
        const Config c = f.basis->state(a);
        for (const auto& t : terms) {
            if (c >> t.site & 1ULL) continue;
            const long b = f.basis->index(c | (1ULL << t.site));
            if (b < 0) continue;
            for (int n = -n_max; n <= n_max; ++n) {
                const long n2 = n + t.harmonic;
                if (n2 < -n_max || n2 > n_max) continue;
                const long row = f.index(b, static_cast<int>(n2)), col = f.index(a, n);
                dtrip.emplace_back(row, col, t.half_rabi);
                dtrip.emplace_back(col, row, std::conj(t.half_rabi));
            }
        }
    }
    f.drive.resize(d * nb, d * nb);
    f.drive.setFromTriplets(dtrip.begin(), dtrip.end());
    htrip.insert(htrip.end(), dtrip.begin(), dtrip.end());
    f.h.resize(d * nb, d * nb);
    f.h.setFromTriplets(htrip.begin(), htrip.end());
    return f;
}

namespace {

linalg::EigenPairs window_pairs(const FloquetMatrix& f, double lo, double hi) {
    linalg::EigenPairs all;
    if (f.dim() <= 4096) {
        all = linalg::eigh(Eigen::MatrixXcd(f.h));
    } else {
        const double center = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
        int k = 32;
        for (;;) {
            all = linalg::eigs_near(f.h, center, k);
            const double reach = (all.values.array() - center).abs().maxCoeff();
            if (reach > half || k >= f.dim()) break;
            k *= 2;
        }
    }
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < all.values.size(); ++i)
        if (all.values(i) >= lo && all.values(i) <= hi) keep.push_back(i);
    linalg::EigenPairs r;
    r.values.resize(static_cast<Eigen::Index>(keep.size()));
    r.vectors.resize(f.dim(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t t = 0; t < keep.size(); ++t) {
        r.values(static_cast<Eigen::Index>(t)) = all.values(keep[t]);
        r.vectors.col(static_cast<Eigen::Index>(t)) = all.vectors.col(keep[t]);
    }
    return r;
}

}  // namespace

QuasienergyResult quasienergies(const FloquetMatrix& f, double lo, double hi, double check_tol) {
    if (!(hi > lo)) throw std::invalid_argument("quasienergies: empty window");
    auto p = window_pairs(f, lo, hi);
    QuasienergyResult r;
    r.values = p.values;
    r.vectors = p.vectors;
    if (check_tol > 0.0) {
        const auto f2 = build_sector_floquet(f.config, f.law, f.geometry, f.sectors, f.n_max + 2);
        const double margin = 0.05 * (hi - lo);
        const auto p2 = window_pairs(f2, lo - margin, hi + margin);
        double worst = 0.0;
        for (Eigen::Index i = 0; i < p.values.size(); ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (Eigen::Index j = 0; j < p2.values.size(); ++j) best = std::min(best, std::abs(p.values(i) - p2.values(j)));
            worst = std::max(worst, best);
        }
        r.convergence = worst;
        r.checked = true;
        if (worst > check_tol) {
            std::ostringstream os;
            os << "quasienergies: truncation not converged, change " << worst << " > " << check_tol;
            throw NumericalError(os.str());
        }
    }
    return r;
}

std::vector<long> sector_block(const FloquetMatrix& f, int sector, int n) {
    if (n < -f.n_max || n > f.n_max) throw std::invalid_argument("sector_block: Fourier index outside truncation");
    std::vector<long> out;
    for (long a = 0; a < static_cast<long>(f.basis->dim()); ++a)
        if (popcount(f.basis->state(a)) == sector) out.push_back(f.index(a, n));
    return out;
}

GvvResult gvv_effective(const FloquetMatrix& f, const std::vector<long>& block, int order, double max_gap_ratio) {
    if (order < 1 || order > 3) throw std::invalid_argument("gvv_effective: order must be 1, 2 or 3");
    if (block.empty()) throw std::invalid_argument("gvv_effective: empty block");
    const long dim = f.dim();
    const Eigen::Index b = static_cast<Eigen::Index>(block.size());
    std::vector<char> in_block(static_cast<std::size_t>(dim), 0);
    for (long i : block) {
        if (i < 0 || i >= dim) throw std::invalid_argument("gvv_effective: block index out of range");
        in_block[static_cast<std::size_t>(i)] = 1;
    }

    GvvResult r;
    r.order = order;
    r.block = block;
    double emin = std::numeric_limits<double>::infinity(), emax = -emin;
    for (long i : block) {
        emin = std::min(emin, f.unperturbed(i));
        emax = std::max(emax, f.unperturbed(i));
    }

    // Column access: drive is Hermitian, so row alpha of drive^T equals conj of column; use column-major iterator.
    const linalg::SpMat& v = f.drive;
    double min_gap = std::numeric_limits<double>::infinity();
    r.correction = Eigen::MatrixXcd::Zero(dim, b);
    r.h1 = Eigen::MatrixXcd::Zero(b, b);
    std::vector<Eigen::Index> pos(static_cast<std::size_t>(dim), -1);
    for (Eigen::Index k = 0; k < b; ++k) pos[static_cast<std::size_t>(block[k])] = k;
    for (Eigen::Index k = 0; k < b; ++k) {
        const long a = block[k];
        const double ea = f.unperturbed(a);
        for (linalg::SpMat::InnerIterator it(v, a); it; ++it) {
            const long beta = it.row();
            if (in_block[static_cast<std::size_t>(beta)]) {
                r.h1(pos[static_cast<std::size_t>(beta)], k) += it.value();
            } else {
                const double gap = ea - f.unperturbed(beta);
                min_gap = std::min(min_gap, std::abs(gap));
                r.correction(beta, k) = it.value() / gap;
            }
        }
    }
    r.gap_ratio = std::isfinite(min_gap) ? (emax - emin) / min_gap : 0.0;
    if (r.gap_ratio >= max_gap_ratio) {
        std::ostringstream os;
        os << "gvv_effective: block not quasi-degenerate (spread/gap = " << r.gap_ratio << ")";
        throw std::invalid_argument(os.str());
    }

    r.h0 = Eigen::MatrixXcd::Zero(b, b);
    for (Eigen::Index k = 0; k < b; ++k) r.h0(k, k) = f.unperturbed(block[k]);
    r.effective = r.h0 + r.h1;
    r.h2 = Eigen::MatrixXcd::Zero(b, b);
    r.h3 = Eigen::MatrixXcd::Zero(b, b);
    if (order >= 2) {
        const Eigen::MatrixXcd vr = v * r.correction;   // dim x b
        Eigen::MatrixXcd overlap(b, b);                 // <Psi0|Psi1>
        for (Eigen::Index k = 0; k < b; ++k) overlap.row(k) = r.correction.row(block[k]);
        for (Eigen::Index k = 0; k < b; ++k) r.h2.row(k) = vr.row(block[k]);
        r.h2 -= r.h1 * overlap;
        r.overlap_term = overlap.cwiseAbs().maxCoeff();
        r.anti_hermitian = 0.5 * (r.h2 - r.h2.adjoint()).cwiseAbs().maxCoeff();
        r.effective += r.h2;
        if (order == 3) {
            const Eigen::MatrixXcd rr = r.correction.adjoint() * r.correction;
            r.h3 = r.correction.adjoint() * vr - r.h1 * rr;
            r.effective += r.h3;
        }
    }
    return r;
}

std::string block_structure_csv(const FloquetMatrix& f) {
    const long d = static_cast<long>(f.basis->dim());
    std::map<std::pair<int, int>, long> nnz;
    for (int k = 0; k < f.drive.outerSize(); ++k)
        for (linalg::SpMat::InnerIterator it(f.drive, k); it; ++it)
            ++nnz[{static_cast<int>(it.row() / d) - f.n_max, static_cast<int>(it.col() / d) - f.n_max}];
    std::ostringstream os;
    os << "block_row,block_col,harmonic,nnz\n";
    for (const auto& [key, cnt] : nnz) os << key.first << ',' << key.second << ',' << key.first - key.second << ',' << cnt << '\n';
    return os.str();
}

}  // namespace rydflux
