// noise.cpp — stochastic noise sampling, Lindblad integration, trajectory ensembles, post-selection
#include "rydflux/noise.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <iomanip>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

namespace rydflux {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    return mix(mix(seed) ^ mix(index + 0x632be59bd9b4e019ULL));
}

NoiseRealization sample_phase_noise(double gamma, NoiseSpec::Mode mode, const DressingConfig& cfg, double dt,
                                    std::size_t n_steps, std::uint64_t seed) {
    if (gamma < 0.0) throw std::invalid_argument("sample_phase_noise: negative rate");
    if (!(dt > 0.0)) throw std::invalid_argument("sample_phase_noise: step must be positive");
    NoiseRealization nr;
    nr.dt = dt;
    nr.mode = mode;
    nr.seed = seed;
    int n_paths = 0;
    switch (mode) {
        case NoiseSpec::Mode::global:
            n_paths = 1;
            for (std::size_t c = 0; c < cfg.colors.size(); ++c)
                for (const auto& kv : cfg.colors[c].rabi) nr.field_path[{kv.first, static_cast<int>(c)}] = 0;
            break;
        case NoiseSpec::Mode::per_color:
            n_paths = static_cast<int>(cfg.colors.size());
            for (std::size_t c = 0; c < cfg.colors.size(); ++c)
                for (const auto& kv : cfg.colors[c].rabi) nr.field_path[{kv.first, static_cast<int>(c)}] = static_cast<int>(c);
            break;
        case NoiseSpec::Mode::per_atom:
            for (std::size_t c = 0; c < cfg.colors.size(); ++c)
                for (const auto& kv : cfg.colors[c].rabi) nr.field_path[{kv.first, static_cast<int>(c)}] = n_paths++;
            break;
    }
    nr.paths.assign(static_cast<std::size_t>(n_paths), std::vector<double>(std::max<std::size_t>(n_steps, 1), 0.0));
    if (gamma == 0.0) return nr;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double sd = std::sqrt(4.0 * gamma * dt);
    for (auto& p : nr.paths)
        for (std::size_t m = 1; m < p.size(); ++m) p[m] = p[m - 1] + sd * normal(rng);
    return nr;
}

std::vector<double> sample_doppler(double sigma, int n_atoms, std::uint64_t seed) {
    if (sigma < 0.0) throw std::invalid_argument("sample_doppler: negative width");
    if (n_atoms < 0) throw std::invalid_argument("sample_doppler: negative atom count");
    std::vector<double> out(static_cast<std::size_t>(n_atoms), 0.0);
    if (sigma == 0.0) return out;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, sigma);
    for (auto& v : out) v = normal(rng);
    return out;
}

namespace {

// Neumaier-compensated running sum.
struct Accumulator {
    double sum{0.0}, comp{0.0};
    void add(double x) {
        const double t = sum + x;
        if (std::abs(sum) >= std::abs(x))
            comp += (sum - t) + x;
        else
            comp += (x - t) + sum;
        sum = t;
    }
    double value() const { return sum + comp; }
};

struct MeanErr {
    double mean{0.0}, err{0.0};
};

MeanErr mean_stderr(const std::vector<double>& v) {
    MeanErr r;
    if (v.empty()) return r;
    Accumulator s;
    for (double x : v) s.add(x);
    r.mean = s.value() / static_cast<double>(v.size());
    if (v.size() > 1) {
        Accumulator q;
        for (double x : v) q.add((x - r.mean) * (x - r.mean));
        r.err = std::sqrt(q.value() / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
    }
    return r;
}

double first_crossing(const std::vector<double>& t, const std::vector<double>& y, double level) {
    for (std::size_t k = 1; k < y.size(); ++k)
        if (y[k - 1] > level && y[k] <= level) return t[k - 1] + (level - y[k - 1]) * (t[k] - t[k - 1]) / (y[k] - y[k - 1]);
    return std::numeric_limits<double>::infinity();
}

}  // namespace

RamseyResult ramsey(double sigma, const std::vector<double>& times, int n_runs, std::uint64_t seed) {
    if (sigma < 0.0) throw std::invalid_argument("ramsey: negative width");
    if (n_runs < 1) throw std::invalid_argument("ramsey: need at least one run");
    RamseyResult r;
    r.times = times;
    std::vector<std::vector<double>> runs(times.size());
    const cplx mi{0.0, -1.0};
    const double s = std::sqrt(0.5);
    for (int k = 0; k < n_runs; ++k) {
        const double delta = sample_doppler(sigma, 1, derive_seed(seed, static_cast<std::uint64_t>(k)))[0];
        for (std::size_t q = 0; q < times.size(); ++q) {
            // pi/2 pulse exp(-i pi/4 sigma_x), free precession under delta * n_r, second pi/2 pulse.
            const cplx g1 = s, r1 = mi * s;
            const cplx r2 = r1 * std::polar(1.0, -delta * times[q]);
            const cplx rf = mi * s * g1 + s * r2;
            runs[q].push_back(2.0 * std::norm(rf) - 1.0);
        }
    }
    for (std::size_t q = 0; q < times.size(); ++q) {
        const auto me = mean_stderr(runs[q]);
        r.coherence.push_back(me.mean);
        r.stderr_.push_back(me.err);
        r.analytic.push_back(std::exp(-0.5 * sigma * sigma * times[q] * times[q]));
    }
    r.one_over_e_time = first_crossing(times, r.coherence, std::exp(-1.0));
    r.analytic_one_over_e_time = sigma > 0.0 ? std::sqrt(2.0) / sigma : std::numeric_limits<double>::infinity();
    return r;
}

HamiltonianFn full_hamiltonian(const ArrayGeometry& g, const DressingConfig& cfg, const InteractionLaw& law,
                               const SectorBasis& basis, double* norm_bound) {
    struct Field {
        cplx half_rabi;
        double detuning;
        std::vector<std::pair<int, int>> pairs;   // (ground idx, excited idx)
    };
    const auto dim = static_cast<Eigen::Index>(basis.dim());
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(dim);
    const auto& act = basis.active_sites();
    for (Eigen::Index a = 0; a < dim; ++a) {
        const Config c = basis.state(static_cast<std::size_t>(a));
        for (std::size_t p = 0; p < act.size(); ++p)
            for (std::size_t q = p + 1; q < act.size(); ++q)
                if ((c >> act[p] & 1ULL) && (c >> act[q] & 1ULL)) diag(a) += pair_interaction(g, law, act[p], act[q]);
    }
    std::vector<Field> fields;
    double bound = diag.size() ? diag.cwiseAbs().maxCoeff() : 0.0;
    for (std::size_t c = 0; c < cfg.colors.size(); ++c)
        for (const auto& [site, om] : cfg.colors[c].rabi) {
            Field f{0.5 * om, cfg.detuning(static_cast<int>(c), site), {}};
            const Config bit = 1ULL << site;
            for (std::size_t a = 0; a < basis.dim(); ++a) {
                const Config cf = basis.state(a);
                if (cf & bit) continue;
                const long b = basis.index(cf | bit);
                if (b >= 0) f.pairs.emplace_back(static_cast<int>(a), static_cast<int>(b));
            }
            bound += std::abs(f.half_rabi);
            fields.push_back(std::move(f));
        }
    if (norm_bound) *norm_bound = bound;
    return [diag, fields](double t, Eigen::MatrixXcd& h) {
        h = Eigen::MatrixXcd::Zero(diag.size(), diag.size());
        h.diagonal() = diag.cast<cplx>();
        for (const auto& f : fields) {
            const cplx amp = f.half_rabi * std::polar(1.0, f.detuning * t);
            for (const auto& [a, b] : f.pairs) {
                h(b, a) += amp;
                h(a, b) += std::conj(amp);
            }
        }
    };
}

HamiltonianFn static_hamiltonian(const Eigen::MatrixXcd& h) {
    return [h](double, Eigen::MatrixXcd& out) { out = h; };
}

Eigen::MatrixXcd collective_sz(const SectorBasis& basis) {
    const auto dim = static_cast<Eigen::Index>(basis.dim());
    Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(dim, dim);
    const double n_act = static_cast<double>(basis.active_sites().size());
    for (Eigen::Index a = 0; a < dim; ++a) s(a, a) = 2.0 * popcount(basis.state(static_cast<std::size_t>(a))) - n_act;
    return s;
}

std::vector<JumpOperator> local_dephasing(const SectorBasis& basis, double gamma) {
    std::vector<JumpOperator> out;
    const auto dim = static_cast<Eigen::Index>(basis.dim());
    for (int i : basis.active_sites()) {
        Eigen::MatrixXcd z = Eigen::MatrixXcd::Zero(dim, dim);
        for (Eigen::Index a = 0; a < dim; ++a) z(a, a) = (basis.state(static_cast<std::size_t>(a)) >> i & 1ULL) ? 1.0 : -1.0;
        out.push_back({gamma, z, "sigma_z_" + std::to_string(i)});
    }
    return out;
}

std::vector<JumpOperator> decay_operators(const SectorBasis& basis, double kappa) {
    std::vector<JumpOperator> out;
    const auto dim = static_cast<Eigen::Index>(basis.dim());
    for (int i : basis.active_sites()) {
        Eigen::MatrixXcd l = Eigen::MatrixXcd::Zero(dim, dim);
        for (Eigen::Index a = 0; a < dim; ++a) {
            const Config c = basis.state(static_cast<std::size_t>(a));
            if (!(c >> i & 1ULL)) continue;
            const long b = basis.index(c & ~(1ULL << i));
            if (b < 0) throw std::invalid_argument("decay_operators: basis lacks the lowered sector");
            l(b, a) = 1.0;
        }
        out.push_back({kappa, l, "sigma_gr_" + std::to_string(i)});
    }
    return out;
}

Eigen::MatrixXcd dissipator(const std::vector<JumpOperator>& ops, const Eigen::MatrixXcd& rho) {
    Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(rho.rows(), rho.cols());
    for (const auto& j : ops) {
        if (j.rate == 0.0) continue;
        const Eigen::MatrixXcd ldl = j.op.adjoint() * j.op;
        d += j.rate * (j.op * rho * j.op.adjoint() - 0.5 * (ldl * rho + rho * ldl));
    }
    return d;
}

OpenSystemResult master_equation_evolve(const HamiltonianFn& hfn, double h_norm_bound, const SectorBasis& basis,
                                        const Eigen::MatrixXcd& rho0, const std::vector<JumpOperator>& jumps,
                                        const std::vector<double>& times, const MasterOptions& opt) {
    const auto dim = static_cast<Eigen::Index>(basis.dim());
    if (dim > opt.max_dim) throw std::invalid_argument("master_equation_evolve: dimension exceeds configured limit");
    if (rho0.rows() != dim || rho0.cols() != dim) throw std::invalid_argument("master_equation_evolve: rho0 shape mismatch");
    if (times.empty()) throw std::invalid_argument("master_equation_evolve: empty time grid");
    if (std::abs(rho0.trace() - cplx{1.0, 0.0}) > 1e-10) throw std::invalid_argument("master_equation_evolve: rho0 trace != 1");
    {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (rho0 + rho0.adjoint()), Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -1e-10 || (rho0 - rho0.adjoint()).cwiseAbs().maxCoeff() > 1e-12)
            throw std::invalid_argument("master_equation_evolve: rho0 not positive semidefinite Hermitian");
    }
    for (const auto& j : jumps)
        if (j.op.rows() != dim || j.op.cols() != dim || j.rate < 0.0)
            throw std::invalid_argument("master_equation_evolve: invalid jump operator " + j.name);

    double gen = 2.0 * h_norm_bound;
    std::vector<Eigen::MatrixXcd> ldl;
    for (const auto& j : jumps) {
        ldl.push_back(j.op.adjoint() * j.op);
        const double ln = j.op.cwiseAbs().colwise().sum().maxCoeff();
        gen += 2.0 * j.rate * ln * ln;
    }
    const double hmax = opt.max_step > 0.0 ? opt.max_step : 0.05 / std::max(gen, 1e-12);

    Eigen::MatrixXcd hbuf;
    auto rhs = [&](double t, const Eigen::MatrixXcd& rho) {
        hfn(t, hbuf);
        Eigen::MatrixXcd d = cplx{0.0, -1.0} * (hbuf * rho - rho * hbuf);
        for (std::size_t k = 0; k < jumps.size(); ++k) {
            if (jumps[k].rate == 0.0) continue;
            d += jumps[k].rate * (jumps[k].op * rho * jumps[k].op.adjoint() - 0.5 * (ldl[k] * rho + rho * ldl[k]));
        }
        return d;
    };

    OpenSystemResult r;
    r.times = times;
    const int n = basis.n_sites();
    const auto nt = static_cast<Eigen::Index>(times.size());
    r.populations = Eigen::MatrixXd::Zero(nt, n);
    r.com_x = Eigen::VectorXd::Zero(nt);
    r.excitation_number = Eigen::MatrixXd::Zero(nt, n + 1);
    r.trace = Eigen::VectorXd::Zero(nt);
    r.min_eigenvalue = std::numeric_limits<double>::infinity();

    Eigen::MatrixXcd rho = rho0;
    auto record = [&](Eigen::Index row) {
        for (Eigen::Index a = 0; a < dim; ++a) {
            const double p = rho(a, a).real();
            const Config c = basis.state(static_cast<std::size_t>(a));
            r.excitation_number(row, popcount(c)) += p;
            for (Config m = c; m; m &= m - 1) r.populations(row, __builtin_ctzll(m)) += p;
        }
        if (!opt.x_positions.empty())
            for (int i = 0; i < n; ++i) r.com_x(row) += opt.x_positions[static_cast<std::size_t>(i)] * r.populations(row, i);
        r.trace(row) = rho.trace().real();
        r.max_trace_error = std::max(r.max_trace_error, std::abs(rho.trace() - cplx{1.0, 0.0}));
        r.max_hermiticity_error = std::max(r.max_hermiticity_error, (rho - rho.adjoint()).cwiseAbs().maxCoeff());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (rho + rho.adjoint()), Eigen::EigenvaluesOnly);
        r.min_eigenvalue = std::min(r.min_eigenvalue, es.eigenvalues().minCoeff());
        if (opt.store_snapshots) r.snapshots.push_back(rho);
    };
    record(0);
    for (std::size_t k = 1; k < times.size(); ++k) {
        const double span = times[k] - times[k - 1];
        if (span < 0.0) throw std::invalid_argument("master_equation_evolve: times must be nondecreasing");
        if (span > 0.0) {
            const auto ns = static_cast<long>(std::ceil(span / hmax - 1e-9));
            const double h = span / static_cast<double>(ns);
            for (long s = 0; s < ns; ++s) {
                const double t = times[k - 1] + static_cast<double>(s) * h;
                const Eigen::MatrixXcd k1 = rhs(t, rho);
                const Eigen::MatrixXcd k2 = rhs(t + 0.5 * h, rho + 0.5 * h * k1);
                const Eigen::MatrixXcd k3 = rhs(t + 0.5 * h, rho + 0.5 * h * k2);
                const Eigen::MatrixXcd k4 = rhs(t + h, rho + h * k3);
                rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            }
        }
        record(static_cast<Eigen::Index>(k));
    }
    if (r.max_trace_error > 1e-8) throw NumericalError("master_equation_evolve: trace not preserved");
    if (r.min_eigenvalue < -opt.positivity_tol) throw NumericalError("master_equation_evolve: positivity lost; reduce the step");
    return r;
}

namespace {

Config sample_configuration(const Eigen::VectorXcd& psi, const SectorBasis& basis, std::mt19937_64& rng) {
    const double total = psi.squaredNorm();
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double target = u(rng) * total, acc = 0.0;
    for (Eigen::Index a = 0; a < psi.size(); ++a) {
        acc += std::norm(psi(a));
        if (acc >= target) return basis.state(static_cast<std::size_t>(a));
    }
    return basis.state(static_cast<std::size_t>(psi.size() - 1));
}

// Applies sigma_gr on a site chosen with probability proportional to <n_i>; returns false if no excitation.
bool apply_jump(Eigen::VectorXcd& psi, const SectorBasis& basis, std::mt19937_64& rng) {
    const int n = basis.n_sites();
    std::vector<double> w(static_cast<std::size_t>(n), 0.0);
    double total = 0.0;
    for (Eigen::Index a = 0; a < psi.size(); ++a) {
        const double p = std::norm(psi(a));
        for (Config m = basis.state(static_cast<std::size_t>(a)); m; m &= m - 1) {
            w[static_cast<std::size_t>(__builtin_ctzll(m))] += p;
            total += p;
        }
    }
    if (total <= 0.0) return false;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double target = u(rng) * total, acc = 0.0;
    int site = n - 1;
    for (int i = 0; i < n; ++i) {
        acc += w[static_cast<std::size_t>(i)];
        if (acc >= target && w[static_cast<std::size_t>(i)] > 0.0) {
            site = i;
            break;
        }
    }
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(psi.size());
    for (Eigen::Index a = 0; a < psi.size(); ++a) {
        const Config c = basis.state(static_cast<std::size_t>(a));
        if (!(c >> site & 1ULL)) continue;
        const long b = basis.index(c & ~(1ULL << site));
        if (b >= 0) out(b) = psi(a);
    }
    const double nn = out.norm();
    if (nn == 0.0) return false;
    psi = out / nn;
    return true;
}

struct RunOutput {
    RunRecord record;
    Eigen::MatrixXd populations;
};

RunOutput run_one(const TrajectorySpec& spec, std::size_t run) {
    const int n = spec.geometry.size();
    RunOutput out;
    out.record.run = run;
    out.record.seed = derive_seed(spec.noise.seed, run);
    std::mt19937_64 rng(derive_seed(out.record.seed, 3));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto nt = static_cast<Eigen::Index>(spec.times.size());
    out.populations = Eigen::MatrixXd::Zero(nt, n);
    const double kappa = spec.noise.decay_rate;

    const auto doppler = sample_doppler(spec.noise.doppler_sigma, n, derive_seed(out.record.seed, 2));
    const int n_r = popcount(spec.initial);

    std::shared_ptr<const SectorBasis> basis;
    std::function<void(Eigen::VectorXcd&, double, double)> advance;
    double hmax = 0.0;
    NoiseRealization noise;
    std::unique_ptr<FullPropagator> prop;
    Eigen::MatrixXcd evecs;
    Eigen::VectorXd evals, nvec;
    std::map<double, Eigen::MatrixXcd> cache;

    if (spec.kind == TrajectorySpec::Kind::full) {
        basis = std::make_shared<SectorBasis>(SectorBasis::full(n, spec.geometry.vacancies));
        {
            FullPropagator probe(spec.geometry, spec.config, spec.law, basis);
            hmax = spec.max_step > 0.0 ? spec.max_step : probe.default_step();
        }
        const auto n_steps = static_cast<std::size_t>(std::ceil(spec.times.back() / hmax)) + 2;
        noise = sample_phase_noise(spec.noise.phase_noise_rate, spec.noise.mode, spec.config, hmax, n_steps,
                                   derive_seed(out.record.seed, 1));
        noise.doppler = doppler;
        prop = std::make_unique<FullPropagator>(spec.geometry, spec.config, spec.law, basis, kappa, &noise);
        advance = [&prop](Eigen::VectorXcd& psi, double t, double h) { prop->step(psi, t, h); };
    } else {
        if (spec.noise.phase_noise_rate > 0.0)
            throw std::invalid_argument("trajectory_ensemble: phase noise requires the full Hamiltonian");
        std::vector<int> numbers;
        for (int k = (kappa > 0.0 ? 0 : n_r); k <= n_r; ++k) numbers.push_back(k);
        basis = std::make_shared<SectorBasis>(SectorBasis::sectors(n, numbers, spec.geometry.vacancies));
        DressingConfig cfg = spec.config;
        for (int i = 0; i < n; ++i)
            if (doppler[static_cast<std::size_t>(i)] != 0.0) cfg.site_shift[i] = cfg.shift(i) + doppler[static_cast<std::size_t>(i)];
        const auto model = build_effective_model(cfg, spec.law, spec.geometry);
        const auto ep = linalg::eigh(Eigen::MatrixXcd(effective_hamiltonian(model, *basis)));
        evecs = ep.vectors;
        evals = ep.values;
        nvec.resize(static_cast<Eigen::Index>(basis->dim()));
        for (std::size_t a = 0; a < basis->dim(); ++a) nvec(static_cast<Eigen::Index>(a)) = popcount(basis->state(a));
        hmax = spec.max_step > 0.0 ? spec.max_step
                                   : (kappa > 0.0 ? 0.01 / (kappa * std::max(n_r, 1)) : std::numeric_limits<double>::infinity());
        advance = [&](Eigen::VectorXcd& psi, double, double h) {
            auto it = cache.find(h);
            if (it == cache.end()) {
                Eigen::VectorXcd ph(evals.size());
                for (Eigen::Index q = 0; q < evals.size(); ++q) ph(q) = std::polar(1.0, -evals(q) * h);
                Eigen::MatrixXcd uh = evecs * ph.asDiagonal() * evecs.adjoint();
                for (Eigen::Index a = 0; a < nvec.size(); ++a) uh.row(a) *= std::exp(-0.5 * kappa * nvec(a) * h);
                it = cache.emplace(h, std::move(uh)).first;
            }
            psi = it->second * psi;
        };
    }

    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(basis->dim()));
    const long i0 = basis->index(spec.initial);
    if (i0 < 0) throw std::invalid_argument("trajectory_ensemble: initial configuration outside basis");
    psi(i0) = 1.0;
    double threshold = u(rng);

    auto record = [&](Eigen::Index row) {
        const double nn = psi.squaredNorm();
        for (Eigen::Index a = 0; a < psi.size(); ++a) {
            const double p = std::norm(psi(a)) / nn;
            for (Config m = basis->state(static_cast<std::size_t>(a)); m; m &= m - 1)
                out.populations(row, __builtin_ctzll(m)) += p;
        }
        out.record.outcomes.push_back(sample_configuration(psi, *basis, rng));
    };
    record(0);
    for (std::size_t k = 1; k < spec.times.size(); ++k) {
        const double span = spec.times[k] - spec.times[k - 1];
        if (span < 0.0) throw std::invalid_argument("trajectory_ensemble: times must be nondecreasing");
        if (span > 0.0) {
            const auto ns = std::isfinite(hmax) ? static_cast<long>(std::ceil(span / hmax - 1e-9)) : 1L;
            const double h = span / static_cast<double>(ns);
            for (long s = 0; s < ns; ++s) {
                const double t = spec.times[k - 1] + static_cast<double>(s) * h;
                advance(psi, t, h);
                if (kappa > 0.0 && psi.squaredNorm() < threshold) {
                    if (apply_jump(psi, *basis, rng)) {
                        ++out.record.jumps;
                        out.record.jump_times.push_back(t + h);
                    } else {
                        psi.normalize();
                    }
                    threshold = u(rng);
                }
            }
        }
        record(static_cast<Eigen::Index>(k));
    }
    return out;
}

}  // namespace

EnsembleResult trajectory_ensemble(const TrajectorySpec& spec, int n_runs, int jobs) {
    if (n_runs < 1) throw std::invalid_argument("trajectory_ensemble: n_runs must be >= 1");
    if (spec.times.empty()) throw std::invalid_argument("trajectory_ensemble: empty time grid");
    if (spec.times.front() < 0.0) throw std::invalid_argument("trajectory_ensemble: negative start time");
    check_noise(spec.noise);
    const int n = spec.geometry.size();
    std::vector<double> x = spec.x_positions;
    if (x.empty())
        for (const auto& p : spec.geometry.sites) x.push_back(p.x);
    if (static_cast<int>(x.size()) != n) throw std::invalid_argument("trajectory_ensemble: x_positions size mismatch");

    std::vector<RunOutput> outs(static_cast<std::size_t>(n_runs));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_runs));
    std::atomic<int> next{0};
    auto worker = [&]() {
        for (;;) {
            const int k = next.fetch_add(1);
            if (k >= n_runs) return;
            try {
                outs[static_cast<std::size_t>(k)] = run_one(spec, static_cast<std::size_t>(k));
            } catch (...) {
                errors[static_cast<std::size_t>(k)] = std::current_exception();
            }
        }
    };
    const int nj = std::max(1, std::min(jobs, n_runs));
    if (nj == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < nj; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    EnsembleResult r;
    r.times = spec.times;
    r.n_sites = n;
    const auto nt = static_cast<Eigen::Index>(spec.times.size());
    r.mean_populations = Eigen::MatrixXd::Zero(nt, n);
    r.stderr_populations = Eigen::MatrixXd::Zero(nt, n);
    r.mean_com_x = Eigen::VectorXd::Zero(nt);
    r.stderr_com_x = Eigen::VectorXd::Zero(nt);
    std::vector<double> buf(static_cast<std::size_t>(n_runs));
    for (Eigen::Index t = 0; t < nt; ++t) {
        for (int i = 0; i < n; ++i) {
            for (int k = 0; k < n_runs; ++k) buf[static_cast<std::size_t>(k)] = outs[static_cast<std::size_t>(k)].populations(t, i);
            const auto me = mean_stderr(buf);
            r.mean_populations(t, i) = me.mean;
            r.stderr_populations(t, i) = me.err;
        }
        for (int k = 0; k < n_runs; ++k) {
            double c = 0.0;
            for (int i = 0; i < n; ++i) c += x[static_cast<std::size_t>(i)] * outs[static_cast<std::size_t>(k)].populations(t, i);
            buf[static_cast<std::size_t>(k)] = c;
        }
        const auto me = mean_stderr(buf);
        r.mean_com_x(t) = me.mean;
        r.stderr_com_x(t) = me.err;
    }
    for (auto& o : outs) {
        r.runs.push_back(std::move(o.record));
        r.run_populations.push_back(std::move(o.populations));
    }
    return r;
}

PostSelectionEstimate post_select(const EnsembleResult& e, int n_r, const std::function<double(Config)>& observable) {
    PostSelectionEstimate p;
    p.times = e.times;
    p.runs = static_cast<int>(e.runs.size());
    for (std::size_t t = 0; t < e.times.size(); ++t) {
        std::vector<double> all, cond;
        for (const auto& run : e.runs) {
            const Config c = run.outcomes.at(t);
            const double v = observable(c);
            all.push_back(v);
            if (popcount(c) == n_r) cond.push_back(v);
        }
        const double n = static_cast<double>(all.size());
        const double ps = n > 0 ? static_cast<double>(cond.size()) / n : 0.0;
        p.success_probability.push_back(ps);
        p.success_stderr.push_back(n > 0 ? std::sqrt(ps * (1.0 - ps) / n) : 0.0);
        p.successes.push_back(static_cast<int>(cond.size()));
        const auto ma = mean_stderr(all);
        p.unconditional_mean.push_back(ma.mean);
        p.unconditional_stderr.push_back(ma.err);
        if (cond.empty()) {
            p.conditional_mean.push_back(std::numeric_limits<double>::quiet_NaN());
            p.conditional_stderr.push_back(std::numeric_limits<double>::quiet_NaN());
        } else {
            const auto mc = mean_stderr(cond);
            p.conditional_mean.push_back(mc.mean);
            p.conditional_stderr.push_back(mc.err);
        }
    }
    return p;
}

DopplerDiagnostics doppler_scaling_diagnostics(double j, double sigma) {
    if (j == 0.0) throw std::invalid_argument("doppler_scaling_diagnostics: J must be nonzero");
    if (sigma < 0.0) throw std::invalid_argument("doppler_scaling_diagnostics: negative width");
    j = std::abs(j);
    DopplerDiagnostics d;
    d.eigenvalue = std::sqrt(j * j + sigma * sigma);
    d.gamma_eff = sigma * sigma / j;
    if (sigma == 0.0) {
        d.unbounded = true;
        d.localization_length = std::numeric_limits<double>::infinity();
        d.coherence_time = std::numeric_limits<double>::infinity();
    } else {
        d.localization_length = j * j / (sigma * sigma);
        d.coherence_time = d.localization_length / j;
    }
    return d;
}

double envelope_damping_time(const std::vector<double>& times, const std::vector<double>& signal, double window,
                             const std::vector<double>& err, double z) {
    if (times.size() != signal.size() || times.size() < 4) throw std::invalid_argument("envelope_damping_time: bad input");
    if (!(window > 0.0)) throw std::invalid_argument("envelope_damping_time: window must be positive");
    if (!err.empty() && err.size() != times.size()) throw std::invalid_argument("envelope_damping_time: err size mismatch");
    std::vector<double> xs, ys;
    const double t0 = times.front();
    std::size_t k = 0;
    while (k < times.size()) {
        const auto w = std::floor((times[k] - t0) / window);
        double lo = signal[k], hi = signal[k], tsum = 0.0, emax = 0.0;
        std::size_t cnt = 0;
        while (k < times.size() && std::floor((times[k] - t0) / window) == w) {
            lo = std::min(lo, signal[k]);
            hi = std::max(hi, signal[k]);
            if (!err.empty()) emax = std::max(emax, err[k]);
            tsum += times[k];
            ++cnt;
            ++k;
        }
        // Only complete windows.
        if (cnt < 2 || t0 + (w + 1.0) * window > times.back() + 1e-12) continue;
        const double floor_span = 2.0 * z * emax;
        if (!err.empty() && hi - lo <= floor_span) {
            if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
            if (floor_span > 0.0) {
                xs.push_back(tsum / static_cast<double>(cnt));
                ys.push_back(std::log(floor_span));
            }
            break;
        }
        if (hi - lo > 0.0) {
            xs.push_back(tsum / static_cast<double>(cnt));
            ys.push_back(std::log(hi - lo));
        }
    }
    if (xs.size() < 2) throw std::invalid_argument("envelope_damping_time: fewer than two complete windows");
    double mx = 0.0, my = 0.0;
    for (std::size_t q = 0; q < xs.size(); ++q) {
        mx += xs[q];
        my += ys[q];
    }
    mx /= static_cast<double>(xs.size());
    my /= static_cast<double>(xs.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t q = 0; q < xs.size(); ++q) {
        sxy += (xs[q] - mx) * (ys[q] - my);
        sxx += (xs[q] - mx) * (xs[q] - mx);
    }
    const double slope = sxy / sxx;
    return slope < 0.0 ? -1.0 / slope : std::numeric_limits<double>::infinity();
}

std::string ensemble_csv(const EnsembleResult& e) {
    std::ostringstream os;
    os << std::setprecision(12) << "time";
    for (int i = 0; i < e.n_sites; ++i) os << ",P_" << i << "_mean,P_" << i << "_stderr";
    os << ",x_com_mean,x_com_stderr\n";
    for (std::size_t t = 0; t < e.times.size(); ++t) {
        const auto row = static_cast<Eigen::Index>(t);
        os << e.times[t];
        for (int i = 0; i < e.n_sites; ++i) os << ',' << e.mean_populations(row, i) << ',' << e.stderr_populations(row, i);
        os << ',' << e.mean_com_x(row) << ',' << e.stderr_com_x(row) << '\n';
    }
    return os.str();
}

std::string run_log_csv(const EnsembleResult& e) {
    std::ostringstream os;
    os << "run,seed,jumps,final_configuration\n";
    for (const auto& r : e.runs)
        os << r.run << ',' << r.seed << ',' << r.jumps << ','
           << (r.outcomes.empty() ? std::string() : bitstring(r.outcomes.back(), e.n_sites)) << '\n';
    return os.str();
}

}  // namespace rydflux
