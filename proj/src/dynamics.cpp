// dynamics.cpp — Yoshida splitting for the exact Hamiltonian, effective-model propagation, observables
#include "rydflux/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

namespace rydflux {

double NoiseRealization::phase(int site, int color, double t) const {
    const auto it = field_path.find({site, color});
    if (it == field_path.end()) return 0.0;
    const auto& p = paths[static_cast<std::size_t>(it->second)];
    if (p.empty() || dt <= 0.0) return 0.0;
    const double pos = std::floor(t / dt);
    const std::size_t m = pos <= 0.0 ? 0 : std::min(static_cast<std::size_t>(pos), p.size() - 1);
    return p[m];
}

namespace {

// Yoshida triple-jump coefficients.
const double yoshida_c1 = 1.0 / (2.0 - std::cbrt(2.0));
const double yoshida_c0 = 1.0 - 2.0 * yoshida_c1;

double pair_energy(Config c, const Eigen::MatrixXd& v, const std::vector<int>& active) {
    double e = 0.0;
    for (std::size_t a = 0; a < active.size(); ++a) {
        if (!(c >> active[a] & 1ULL)) continue;
        for (std::size_t b = a + 1; b < active.size(); ++b)
            if (c >> active[b] & 1ULL) e += v(active[a], active[b]);
    }
    return e;
}

}  // namespace

FullPropagator::FullPropagator(const ArrayGeometry& g, const DressingConfig& cfg, const InteractionLaw& law,
                               std::shared_ptr<const SectorBasis> basis, double decay_rate,
                               const NoiseRealization* noise)
    : basis_(std::move(basis)), decay_(decay_rate), noise_(noise) {
    if (!basis_) throw std::invalid_argument("FullPropagator: null basis");
    if (basis_->n_sites() != g.size()) throw std::invalid_argument("FullPropagator: basis/geometry size mismatch");
    if (decay_rate < 0.0) throw std::invalid_argument("FullPropagator: negative decay rate");
    const int n = g.size();
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(n, n);
    double vmax = 0.0;
    const auto& act = basis_->active_sites();
    for (std::size_t a = 0; a < act.size(); ++a)
        for (std::size_t b = a + 1; b < act.size(); ++b) {
            v(act[a], act[b]) = v(act[b], act[a]) = pair_interaction(g, law, act[a], act[b]);
            vmax = std::max(vmax, std::abs(v(act[a], act[b])));
        }

    double dmax = 0.0;
    for (std::size_t c = 0; c < cfg.colors.size(); ++c)
        for (const auto& [site, om] : cfg.colors[c].rabi) {
            if (g.vacant(site)) throw ConfigError("FullPropagator: dressing on vacant site " + std::to_string(site));
            double det = cfg.detuning(static_cast<int>(c), site);
            if (noise && !noise->doppler.empty()) det += noise->doppler.at(static_cast<std::size_t>(site));
            const std::vector<double>* path = nullptr;
            if (noise && noise->dt > 0.0) {
                const auto it = noise->field_path.find({site, static_cast<int>(c)});
                if (it != noise->field_path.end() && !noise->paths[static_cast<std::size_t>(it->second)].empty())
                    path = &noise->paths[static_cast<std::size_t>(it->second)];
            }
            fields_.push_back({site, static_cast<int>(c), 0.5 * om, det, path});
            dmax = std::max(dmax, std::abs(det));
            if (std::find(drive_sites_.begin(), drive_sites_.end(), site) == drive_sites_.end())
                drive_sites_.push_back(site);
        }
    std::sort(drive_sites_.begin(), drive_sites_.end());
    omega_max_ = std::max(dmax + vmax, 1e-12);

    const std::size_t dim = basis_->dim();
    energy_.resize(static_cast<Eigen::Index>(dim));
    excitations_.resize(static_cast<Eigen::Index>(dim));
    for (std::size_t a = 0; a < dim; ++a) {
        energy_(static_cast<Eigen::Index>(a)) = pair_energy(basis_->state(a), v, act);
        excitations_(static_cast<Eigen::Index>(a)) = popcount(basis_->state(a));
    }

    bit_kernel_ = basis_->mode() == SectorBasis::Mode::full && basis_->vacancies().empty();
    if (!bit_kernel_) {
        pairs_.resize(drive_sites_.size());
        for (std::size_t k = 0; k < drive_sites_.size(); ++k) {
            const Config bit = 1ULL << drive_sites_[k];
            for (std::size_t a = 0; a < dim; ++a) {
                const Config c = basis_->state(a);
                if (c & bit) continue;
                const long b = basis_->index(c | bit);
                if (b >= 0) pairs_[k].emplace_back(static_cast<int>(a), static_cast<int>(b));
            }
        }
    }
}

void FullPropagator::diagonal_factor(Eigen::VectorXcd& factor, double tau) const {
    const Eigen::Index dim = energy_.size();
    factor.resize(dim);
    if (decay_ > 0.0) {
        for (Eigen::Index a = 0; a < dim; ++a)
            factor(a) = std::polar(std::exp(-0.5 * decay_ * excitations_(a) * tau), -energy_(a) * tau);
    } else {
        for (Eigen::Index a = 0; a < dim; ++a) factor(a) = std::polar(1.0, -energy_(a) * tau);
    }
}

void FullPropagator::apply_diagonal(Eigen::VectorXcd& psi, const Eigen::VectorXcd& factor) const {
    psi.array() *= factor.array();
}

void FullPropagator::apply_drive(Eigen::VectorXcd& psi, double t, double tau) const {
    double* d = reinterpret_cast<double*>(psi.data());
    for (std::size_t k = 0; k < drive_sites_.size(); ++k) {
        const int site = drive_sites_[k];
        cplx f{0.0, 0.0};
        for (const auto& fl : fields_) {
            if (fl.site != site) continue;
            double ph = fl.detuning * t;
            if (fl.path) {
                const auto& p = *fl.path;
                const double pos = std::floor(t / noise_->dt);
                ph += p[pos <= 0.0 ? 0 : std::min(static_cast<std::size_t>(pos), p.size() - 1)];
            }
            f += fl.half_rabi * std::polar(1.0, ph);
        }
        const double af = std::abs(f);
        if (af == 0.0) continue;
        const double c = std::cos(af * tau), s = std::sin(af * tau);
        const double theta = std::arg(f);
        // new_r = c r + w g, new_g = c g - conj(w) r, with w = -i s e^{i theta}
        const double wr = s * std::sin(theta), wi = -s * std::cos(theta);
        if (bit_kernel_) {
            const std::size_t stride = std::size_t{1} << site;
            const std::size_t dim = static_cast<std::size_t>(psi.size());
            for (std::size_t base = 0; base < dim; base += 2 * stride) {
                double* gp = d + 2 * base;
                double* rp = d + 2 * (base + stride);
                for (std::size_t q = 0; q < 2 * stride; q += 2) {
                    const double gr = gp[q], gi = gp[q + 1], rr = rp[q], ri = rp[q + 1];
                    rp[q] = c * rr + wr * gr - wi * gi;
                    rp[q + 1] = c * ri + wr * gi + wi * gr;
                    gp[q] = c * gr - wr * rr - wi * ri;
                    gp[q + 1] = c * gi - wr * ri + wi * rr;
                }
            }
        } else {
            for (const auto& [ga, ra] : pairs_[k]) {
                double* gp = d + 2 * static_cast<std::size_t>(ga);
                double* rp = d + 2 * static_cast<std::size_t>(ra);
                const double gr = gp[0], gi = gp[1], rr = rp[0], ri = rp[1];
                rp[0] = c * rr + wr * gr - wi * gi;
                rp[1] = c * ri + wr * gi + wi * gr;
                gp[0] = c * gr - wr * rr - wi * ri;
                gp[1] = c * gi - wr * ri + wi * rr;
            }
        }
    }
}

void FullPropagator::step(Eigen::VectorXcd& psi, double t, double h) const {
    const double c1 = yoshida_c1 * h, c0 = yoshida_c0 * h;
    if (h != cached_h_ || outer_factor_.size() != energy_.size()) {
        diagonal_factor(outer_factor_, 0.5 * c1);
        diagonal_factor(inner_factor_, 0.5 * (c1 + c0));
        cached_h_ = h;
    }
    apply_diagonal(psi, outer_factor_);
    apply_drive(psi, t + 0.5 * c1, c1);
    apply_diagonal(psi, inner_factor_);
    apply_drive(psi, t + c1 + 0.5 * c0, c0);
    apply_diagonal(psi, inner_factor_);
    apply_drive(psi, t + c1 + c0 + 0.5 * c1, c1);
    apply_diagonal(psi, outer_factor_);
}

void init_result(EvolutionResult& r, const std::vector<double>& times, int n_sites,
                 const std::vector<std::pair<int, int>>& correlators) {
    const auto nt = static_cast<Eigen::Index>(times.size());
    r.times = times;
    r.populations = Eigen::MatrixXd::Zero(nt, n_sites);
    r.com_x = Eigen::VectorXd::Zero(nt);
    r.excitation_number = Eigen::MatrixXd::Zero(nt, n_sites + 1);
    r.norm = Eigen::VectorXd::Zero(nt);
    r.correlator_pairs = correlators;
    r.correlators = Eigen::MatrixXd::Zero(nt, static_cast<Eigen::Index>(correlators.size()));
    for (const auto& [i, j] : correlators)
        if (i < 0 || j < 0 || i >= n_sites || j >= n_sites || i == j)
            throw std::invalid_argument("init_result: invalid correlator pair");
}

void record_observables(EvolutionResult& r, std::size_t row, const Eigen::VectorXcd& psi, const SectorBasis& basis,
                        const std::vector<double>& x) {
    const auto t = static_cast<Eigen::Index>(row);
    const int n = basis.n_sites();
    std::vector<double> pop(static_cast<std::size_t>(n), 0.0), sect(static_cast<std::size_t>(n + 1), 0.0);
    std::vector<double> corr(r.correlator_pairs.size(), 0.0);
    double total = 0.0;
    for (std::size_t a = 0; a < basis.dim(); ++a) {
        const double p = std::norm(psi(static_cast<Eigen::Index>(a)));
        if (p == 0.0) continue;
        const Config c = basis.state(a);
        total += p;
        sect[static_cast<std::size_t>(popcount(c))] += p;
        for (Config m = c; m; m &= m - 1) pop[static_cast<std::size_t>(__builtin_ctzll(m))] += p;
        for (std::size_t k = 0; k < corr.size(); ++k) {
            const auto [i, j] = r.correlator_pairs[k];
            if ((c >> i & 1ULL) && (c >> j & 1ULL)) corr[k] += p;
        }
    }
    double com = 0.0;
    for (int i = 0; i < n; ++i) {
        r.populations(t, i) = pop[static_cast<std::size_t>(i)];
        if (!x.empty()) com += x[static_cast<std::size_t>(i)] * pop[static_cast<std::size_t>(i)];
    }
    r.com_x(t) = com;
    for (int k = 0; k <= n; ++k) r.excitation_number(t, k) = total > 0.0 ? sect[static_cast<std::size_t>(k)] / total : 0.0;
    r.norm(t) = std::sqrt(total);
    for (std::size_t k = 0; k < corr.size(); ++k) r.correlators(t, static_cast<Eigen::Index>(k)) = corr[k];
}

Eigen::VectorXcd embed(const StateVector& s, const SectorBasis& target, double tol) {
    if (!s.basis) throw std::invalid_argument("embed: state without basis");
    if (s.basis->n_sites() != target.n_sites()) throw std::invalid_argument("embed: site count mismatch");
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(target.dim()));
    double lost = 0.0;
    for (std::size_t a = 0; a < s.basis->dim(); ++a) {
        const cplx v = s.amp(static_cast<Eigen::Index>(a));
        if (v == cplx{0.0, 0.0}) continue;
        const long b = target.index(s.basis->state(a));
        if (b < 0)
            lost += std::norm(v);
        else
            out(b) = v;
    }
    if (lost > tol) throw std::invalid_argument("embed: state has weight outside the target basis");
    return out;
}

namespace {

void check_times(const std::vector<double>& times, const char* who) {
    if (times.empty()) throw std::invalid_argument(std::string(who) + ": empty time grid");
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (!std::isfinite(times[k])) throw std::invalid_argument(std::string(who) + ": non-finite time");
        if (k > 0 && times[k] < times[k - 1]) throw std::invalid_argument(std::string(who) + ": times must be nondecreasing");
    }
}

std::vector<double> x_of(const ArrayGeometry& g) {
    std::vector<double> x;
    for (const auto& p : g.sites) x.push_back(p.x);
    return x;
}

std::shared_ptr<const SectorBasis> make_basis(const ArrayGeometry& g, const EvolveOptions& opt) {
    switch (opt.basis_mode) {
        case SectorBasis::Mode::full: return std::make_shared<SectorBasis>(SectorBasis::full(g.size(), g.vacancies));
        case SectorBasis::Mode::fixed:
            return std::make_shared<SectorBasis>(SectorBasis::fixed(g.size(), opt.band_center, g.vacancies));
        case SectorBasis::Mode::band:
            return std::make_shared<SectorBasis>(
                SectorBasis::band(g.size(), opt.band_center, opt.band_width, g.vacancies));
        case SectorBasis::Mode::sectors: break;
    }
    throw std::invalid_argument("evolve_full: unsupported basis mode");
}

}  // namespace

EvolutionResult evolve_full(const ArrayGeometry& g, const DressingConfig& cfg, const InteractionLaw& law,
                            const StateVector& psi0, const std::vector<double>& times, const EvolveOptions& opt,
                            const NoiseRealization* noise) {
    check_times(times, "evolve_full");
    if (std::abs(psi0.norm() - 1.0) > 1e-9) throw std::invalid_argument("evolve_full: initial state not normalized");
    auto basis = make_basis(g, opt);
    FullPropagator prop(g, cfg, law, basis, opt.decay_rate, noise);
    Eigen::VectorXcd psi = embed(psi0, *basis);

    const double hmax = opt.max_step > 0.0 ? opt.max_step : prop.default_step();
    const auto x = x_of(g);
    EvolutionResult r;
    r.basis = basis;
    r.step = hmax;
    init_result(r, times, g.size(), opt.correlators);

    // Outermost sectors that exist only because of truncation.
    const int n_active = static_cast<int>(basis->active_sites().size());
    const bool top_cut = basis->max_excitations() < n_active;
    const bool bottom_cut = basis->min_excitations() > 0;
    const bool truncated = basis->mode() != SectorBasis::Mode::full && (top_cut || bottom_cut);

    auto record = [&](std::size_t row) {
        record_observables(r, row, psi, *basis, x);
        if (opt.store_snapshots) r.snapshots.push_back(psi);
        if (opt.decay_rate == 0.0) r.max_norm_drift = std::max(r.max_norm_drift, std::abs(r.norm(static_cast<Eigen::Index>(row)) - 1.0));
        if (truncated) {
            double w = 0.0;
            if (top_cut) w += r.excitation_number(static_cast<Eigen::Index>(row), basis->max_excitations());
            if (bottom_cut && basis->min_excitations() != basis->max_excitations())
                w += r.excitation_number(static_cast<Eigen::Index>(row), basis->min_excitations());
            r.band_edge_weight = std::max(r.band_edge_weight, w);
        }
    };

    record(0);
    for (std::size_t k = 1; k < times.size(); ++k) {
        const double span = times[k] - times[k - 1];
        if (span > 0.0) {
            const auto nsteps = static_cast<long>(std::ceil(span / hmax - 1e-9));
            const double h = span / static_cast<double>(nsteps);
            for (long s = 0; s < nsteps; ++s) prop.step(psi, times[k - 1] + static_cast<double>(s) * h, h);
        }
        record(k);
    }
    if (r.max_norm_drift > 1e-8) {
        std::ostringstream os;
        os << "evolve_full: norm drift " << r.max_norm_drift << " exceeds 1e-8";
        throw NumericalError(os.str());
    }
    if (truncated && r.band_edge_weight > opt.leakage_threshold) {
        std::ostringstream os;
        os << "evolve_full: band truncation leakage " << r.band_edge_weight << " above " << opt.leakage_threshold
           << "; widen the band to k = " << opt.band_width + 1;
        throw NumericalError(os.str());
    }
    if (opt.richardson) {
        EvolveOptions fine = opt;
        fine.richardson = false;
        fine.store_snapshots = false;
        fine.max_step = 0.5 * hmax;
        const auto rf = evolve_full(g, cfg, law, psi0, times, fine, noise);
        const double diff = (rf.populations - r.populations).cwiseAbs().maxCoeff();
        if (diff > opt.richardson_tol) {
            std::ostringstream os;
            os << "evolve_full: step-halving check failed, population change " << diff << " > " << opt.richardson_tol;
            throw NumericalError(os.str());
        }
    }
    return r;
}

linalg::SpMat effective_hamiltonian(const EffectiveModel& m, const SectorBasis& basis) {
    if (basis.n_sites() != m.n_sites) throw std::invalid_argument("effective_hamiltonian: basis/model size mismatch");
    const auto& act = basis.active_sites();
    std::vector<Eigen::Triplet<cplx>> trip;
    for (std::size_t a = 0; a < basis.dim(); ++a) {
        const Config c = basis.state(a);
        double e = 0.0;
        for (std::size_t p = 0; p < act.size(); ++p) {
            const int i = act[p];
            if (!(c >> i & 1ULL)) continue;
            e += m.potential(i);
            for (std::size_t q = p + 1; q < act.size(); ++q)
                if (c >> act[q] & 1ULL) e += m.density_interaction(i, act[q]);
        }
        trip.emplace_back(static_cast<int>(a), static_cast<int>(a), e);
        for (int i : act) {
            if (!(c >> i & 1ULL)) continue;
            for (int j : act) {
                if (c >> j & 1ULL) continue;
                const cplx hop = m.hopping(j, i);
                if (hop == cplx{0.0, 0.0}) continue;
                const long b = basis.index((c & ~(1ULL << i)) | (1ULL << j));
                if (b >= 0) trip.emplace_back(static_cast<int>(b), static_cast<int>(a), hop);
            }
        }
    }
    linalg::SpMat h(static_cast<Eigen::Index>(basis.dim()), static_cast<Eigen::Index>(basis.dim()));
    h.setFromTriplets(trip.begin(), trip.end());
    return h;
}

EvolutionResult evolve_effective(const EffectiveModel& m, const StateVector& psi0, const std::vector<double>& times,
                                 int n_r, const EffectiveOptions& opt) {
    check_times(times, "evolve_effective");
    if (std::abs(psi0.norm() - 1.0) > 1e-9) throw std::invalid_argument("evolve_effective: initial state not normalized");
    std::set<int> vac(m.vacancies.begin(), m.vacancies.end());
    const int n_active = m.n_sites - static_cast<int>(vac.size());
    if (n_r < 0 || n_r > n_active) throw std::invalid_argument("evolve_effective: invalid excitation number");
    // Binomial dimension check before enumeration.
    double dimd = 1.0;
    for (int k = 0; k < n_r; ++k) dimd = dimd * (n_active - k) / (k + 1);
    if (dimd > static_cast<double>(opt.max_dim))
        throw std::invalid_argument("evolve_effective: sector dimension exceeds configured limit");
    auto basis = std::make_shared<SectorBasis>(SectorBasis::fixed(m.n_sites, n_r, vac));
    Eigen::VectorXcd psi;
    try {
        psi = embed(psi0, *basis);
    } catch (const std::invalid_argument&) {
        throw std::invalid_argument("evolve_effective: initial state not in the N_r sector");
    }
    const auto h = effective_hamiltonian(m, *basis);

    EvolutionResult r;
    r.basis = basis;
    init_result(r, times, m.n_sites, opt.correlators);
    auto record = [&](std::size_t row, const Eigen::VectorXcd& v) {
        record_observables(r, row, v, *basis, opt.x_positions);
        if (opt.store_snapshots) r.snapshots.push_back(v);
        if (opt.decay_rate == 0.0) r.max_norm_drift = std::max(r.max_norm_drift, std::abs(r.norm(static_cast<Eigen::Index>(row)) - 1.0));
    };
    const double t0 = times.front();
    const double rate = 0.5 * opt.decay_rate * n_r;
    if (static_cast<long>(basis->dim()) <= opt.dense_limit) {
        const auto ep = linalg::eigh(Eigen::MatrixXcd(h));
        const Eigen::VectorXcd c0 = ep.vectors.adjoint() * psi;
        for (std::size_t k = 0; k < times.size(); ++k) {
            const double dt = times[k] - t0;
            Eigen::VectorXcd ck(c0.size());
            for (Eigen::Index q = 0; q < c0.size(); ++q) ck(q) = c0(q) * std::polar(1.0, -ep.values(q) * dt);
            Eigen::VectorXcd v = ep.vectors * ck;
            if (rate > 0.0) v *= std::exp(-rate * dt);
            record(k, v);
        }
    } else {
        const double nb = linalg::norm_bound(h);
        const linalg::MatVec apply = [&h](const Eigen::VectorXcd& in, Eigen::VectorXcd& out) { out = h * in; };
        for (std::size_t k = 0; k < times.size(); ++k) {
            if (k > 0 && times[k] > times[k - 1]) psi = linalg::expm_krylov(apply, psi, times[k] - times[k - 1], nb);
            Eigen::VectorXcd v = psi;
            if (rate > 0.0) v *= std::exp(-rate * (times[k] - t0));
            record(k, v);
        }
    }
    return r;
}

Discrepancy compare_runs(const EvolutionResult& a, const EvolutionResult& b) {
    if (a.times.size() != b.times.size()) throw std::invalid_argument("compare_runs: time grids differ");
    for (std::size_t k = 0; k < a.times.size(); ++k)
        if (std::abs(a.times[k] - b.times[k]) > 1e-12 * std::max(1.0, std::abs(a.times[k])))
            throw std::invalid_argument("compare_runs: time grids differ");
    if (a.populations.cols() != b.populations.cols() || a.correlator_pairs != b.correlator_pairs)
        throw std::invalid_argument("compare_runs: observable sets differ");
    Discrepancy d;
    const Eigen::Index nt = a.populations.rows();
    double sum = 0.0;
    for (Eigen::Index t = 0; t < nt; ++t) {
        const double l1 = (a.populations.row(t) - b.populations.row(t)).cwiseAbs().sum();
        d.max_l1 = std::max(d.max_l1, l1);
        sum += l1;
    }
    d.mean_l1 = nt > 0 ? sum / static_cast<double>(nt) : 0.0;
    auto maxdev = [](const auto& x, const auto& y) { return x.size() == 0 ? 0.0 : (x - y).cwiseAbs().maxCoeff(); };
    for (Eigen::Index i = 0; i < a.populations.cols(); ++i)
        d.max_deviation["P_" + std::to_string(i)] = maxdev(a.populations.col(i), b.populations.col(i));
    d.max_deviation["x_com"] = maxdev(a.com_x, b.com_x);
    for (Eigen::Index k = 0; k < a.excitation_number.cols(); ++k)
        d.max_deviation["N_" + std::to_string(k)] = maxdev(a.excitation_number.col(k), b.excitation_number.col(k));
    d.max_deviation["norm"] = maxdev(a.norm, b.norm);
    for (std::size_t k = 0; k < a.correlator_pairs.size(); ++k) {
        const auto [i, j] = a.correlator_pairs[k];
        d.max_deviation["corr_" + std::to_string(i) + "_" + std::to_string(j)] =
            maxdev(a.correlators.col(static_cast<Eigen::Index>(k)), b.correlators.col(static_cast<Eigen::Index>(k)));
    }
    return d;
}

double two_body_correlator(const StateVector& s, int i, int j, bool* flagged) {
    if (!s.basis) throw std::invalid_argument("two_body_correlator: state without basis");
    const int n = s.basis->n_sites();
    if (i < 0 || j < 0 || i >= n || j >= n) throw std::invalid_argument("two_body_correlator: site out of range");
    if (flagged) *flagged = (i == j);
    if (i == j) return 0.0;
    double acc = 0.0;
    for (std::size_t a = 0; a < s.basis->dim(); ++a) {
        const Config c = s.basis->state(a);
        if ((c >> i & 1ULL) && (c >> j & 1ULL)) acc += std::norm(s.amp(static_cast<Eigen::Index>(a)));
    }
    return acc;
}

std::vector<double> region_com(const EvolutionResult& r, const std::vector<double>& x, const std::vector<int>& region) {
    std::vector<double> out;
    for (Eigen::Index t = 0; t < r.populations.rows(); ++t) {
        double w = 0.0, m = 0.0;
        for (int i : region) {
            w += r.populations(t, i);
            m += x.at(static_cast<std::size_t>(i)) * r.populations(t, i);
        }
        out.push_back(w > 0.0 ? m / w : std::numeric_limits<double>::quiet_NaN());
    }
    return out;
}

std::string evolution_csv(const EvolutionResult& r) {
    std::ostringstream os;
    os << std::setprecision(12);
    const Eigen::Index n = r.populations.cols();
    os << "time";
    for (Eigen::Index i = 0; i < n; ++i) os << ",P_" << i;
    os << ",x_com";
    for (Eigen::Index k = 0; k < r.excitation_number.cols(); ++k) os << ",N_" << k;
    os << ",norm";
    for (const auto& [i, j] : r.correlator_pairs) os << ",corr_" << i << '_' << j;
    os << '\n';
    for (std::size_t t = 0; t < r.times.size(); ++t) {
        const auto row = static_cast<Eigen::Index>(t);
        os << r.times[t];
        for (Eigen::Index i = 0; i < n; ++i) os << ',' << r.populations(row, i);
        os << ',' << r.com_x(row);
        for (Eigen::Index k = 0; k < r.excitation_number.cols(); ++k) os << ',' << r.excitation_number(row, k);
        os << ',' << r.norm(row);
        for (Eigen::Index k = 0; k < r.correlators.cols(); ++k) os << ',' << r.correlators(row, k);
        os << '\n';
    }
    return os.str();
}

}  // namespace rydflux
