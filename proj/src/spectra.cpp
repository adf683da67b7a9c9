// spectra.cpp — two-body Bloch spectra, classification, Chern numbers and edge-mode transport
#include "rydflux/spectra.hpp"

#include "rydflux/linalg.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

namespace rydflux {

void check_cylinder(const CylinderModel& m) {
    if (m.lx < 1) throw ConfigError("check_cylinder: lx must be >= 1");
    if (!std::isfinite(m.jx) || !std::isfinite(m.jy) || !std::isfinite(m.flux))
        throw ConfigError("check_cylinder: non-finite hopping or flux");
    if (m.ly < 0 || (m.ly > 0 && m.ly % 2 == 0)) throw ConfigError("check_cylinder: periodic ly must be odd");
    if (m.ly == 0 && m.r_max < 1) throw ConfigError("check_cylinder: r_max must be >= 1");
    if (m.dx_um <= 0.0 || m.dy_um <= 0.0) throw ConfigError("check_cylinder: lattice spacings must be positive");
    if (m.lx > 64) throw ConfigError("check_cylinder: lx too large");
}

double cylinder_interaction(const CylinderModel& m, int dx, int dy) {
    dx = std::abs(dx);
    dy = std::abs(dy);
    if (m.ly > 0) dy = std::min(dy % m.ly, m.ly - dy % m.ly);
    if (dx == 0 && dy == 0) return m.hard_core ? 0.0 : m.onsite_u;
    double v = 0.0;
    const auto it = m.v_override.find({dx, dy});
    if (it != m.v_override.end()) {
        v = it->second;
    } else if (m.c6 != 0.0) {
        const double rx = dx * m.dx_um, ry = dy * m.dy_um;
        const double r2 = rx * rx + ry * ry;
        v = m.c6 / (r2 * r2 * r2);
    }
    return std::abs(v) < m.v_cutoff * std::abs(m.jx) ? 0.0 : v;
}

Eigen::MatrixXcd single_particle_bloch(const CylinderModel& m, double k) {
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(m.lx, m.lx);
    for (int x = 0; x < m.lx; ++x) {
        h(x, x) = 2.0 * m.jy * std::cos(m.flux * x - k);
        if (x + 1 < m.lx) {
            h(x + 1, x) = m.jx;
            h(x, x + 1) = m.jx;
        }
    }
    return h;
}

long TwoBodyBasis::index(int x1, int x2, int r) const {
    if (x1 < 0 || x2 < 0 || x1 >= lx || x2 >= lx || r < 0 || r >= r_range) return -1;
    return table[static_cast<std::size_t>((r * lx + x1) * lx + x2)];
}

TwoBodyBasis make_two_body_basis(const CylinderModel& m) {
    check_cylinder(m);
    TwoBodyBasis b;
    b.lx = m.lx;
    b.r_range = m.ly > 0 ? (m.ly - 1) / 2 + 1 : m.r_max + 1;
    b.table.assign(static_cast<std::size_t>(b.r_range * m.lx * m.lx), -1);
    for (int r = 0; r < b.r_range; ++r)
        for (int x1 = 0; x1 < m.lx; ++x1)
            for (int x2 = 0; x2 < m.lx; ++x2) {
                if (r == 0 && (m.hard_core ? x1 >= x2 : x1 > x2)) continue;
                b.table[static_cast<std::size_t>((r * m.lx + x1) * m.lx + x2)] = static_cast<int>(b.states.size());
                b.states.push_back({x1, x2, r});
            }
    return b;
}

namespace {

struct Site2 {
    int x, y;
};

// Canonical (x1, x2, r, Y) for excitations a, b; returns false when outside the basis.
bool canonical(const CylinderModel& m, Site2 a, Site2 b, int& x1, int& x2, int& r, int& y0) {
    if (m.ly > 0) {
        a.y = ((a.y % m.ly) + m.ly) % m.ly;
        b.y = ((b.y % m.ly) + m.ly) % m.ly;
        int d = ((b.y - a.y) % m.ly + m.ly) % m.ly;
        if (d > (m.ly - 1) / 2) {
            std::swap(a, b);
            d = m.ly - d;
        }
        if (d == 0 && a.x > b.x) std::swap(a, b);
        x1 = a.x;
        x2 = b.x;
        r = d;
        y0 = a.y;
        return true;
    }
    int d = b.y - a.y;
    if (d < 0 || (d == 0 && a.x > b.x)) {
        std::swap(a, b);
        d = -d;
    }
    if (d > m.r_max) return false;
    x1 = a.x;
    x2 = b.x;
    r = d;
    y0 = a.y;
    return true;
}

}  // namespace

Eigen::MatrixXcd build_two_body_bloch(const CylinderModel& m, const TwoBodyBasis& basis, double k) {
    const auto dim = static_cast<Eigen::Index>(basis.dim());
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(dim, dim);
    const double sq2 = std::sqrt(2.0);
    for (Eigen::Index s = 0; s < dim; ++s) {
        const auto [x1, x2, r] = basis.states[static_cast<std::size_t>(s)];
        const bool doubly = (r == 0 && x1 == x2);
        h(s, s) += cylinder_interaction(m, x2 - x1, r);
        const Site2 p[2] = {{x1, 0}, {x2, r}};
        for (int which = 0; which < (doubly ? 1 : 2); ++which) {
            const Site2 mover = p[which], other = p[1 - which];
            struct Move {
                int dx, dy;
                cplx amp;
            };
            const Move moves[4] = {{1, 0, m.jx},
                                   {-1, 0, m.jx},
                                   {0, 1, m.jy * std::polar(1.0, m.flux * mover.x)},
                                   {0, -1, m.jy * std::polar(1.0, -m.flux * mover.x)}};
            for (const auto& mv : moves) {
                const Site2 q{mover.x + mv.dx, mover.y + mv.dy};
                if (q.x < 0 || q.x >= m.lx) continue;
                bool same = q.x == other.x && q.y == other.y;
                if (m.ly > 0) same = q.x == other.x && ((q.y - other.y) % m.ly + m.ly) % m.ly == 0;
                if (same && m.hard_core) continue;
                int nx1, nx2, nr, y0;
                if (!canonical(m, q, other, nx1, nx2, nr, y0)) continue;
                const long t = basis.index(nx1, nx2, nr);
                if (t < 0) continue;
                cplx amp = mv.amp;
                if (doubly) amp *= sq2;
                if (same) amp *= sq2;
                h(t, s) += amp * std::polar(1.0, -k * y0);
            }
        }
    }
    return h;
}

std::vector<double> k_grid(int n, bool include_endpoint) {
    if (n < 1) throw std::invalid_argument("k_grid: need at least one point");
    std::vector<double> ks;
    const double den = include_endpoint && n > 1 ? n - 1 : n;
    for (int q = 0; q < n; ++q) ks.push_back(two_pi * q / den);
    return ks;
}

std::pair<double, double> continuum_envelope(const CylinderModel& m, int n_k) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (int q = 0; q < n_k; ++q) {
        const auto ep = linalg::eigh(single_particle_bloch(m, two_pi * q / n_k), false);
        lo = std::min(lo, ep.values.minCoeff());
        hi = std::max(hi, ep.values.maxCoeff());
    }
    return {2.0 * lo, 2.0 * hi};
}

namespace {

template <class F>
void parallel_for(int n, int jobs, F&& f) {
    const int nj = std::max(1, std::min(jobs, n));
    if (nj == 1) {
        for (int i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errs(static_cast<std::size_t>(n));
    std::vector<std::thread> pool;
    for (int w = 0; w < nj; ++w)
        pool.emplace_back([&]() {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    f(i);
                } catch (...) {
                    errs[static_cast<std::size_t>(i)] = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
}

}  // namespace

BlochSpectrum sweep_spectrum(const CylinderModel& m, const std::vector<double>& ks, bool store_vectors, int jobs,
                             bool check_convergence) {
    auto basis = std::make_shared<TwoBodyBasis>(make_two_body_basis(m));
    BlochSpectrum s;
    s.k = ks;
    s.basis = basis;
    s.energies.resize(ks.size());
    if (store_vectors) s.vectors.resize(ks.size());
    parallel_for(static_cast<int>(ks.size()), jobs, [&](int q) {
        const auto ep = linalg::eigh(build_two_body_bloch(m, *basis, ks[static_cast<std::size_t>(q)]), store_vectors);
        s.energies[static_cast<std::size_t>(q)] = ep.values;
        if (store_vectors) s.vectors[static_cast<std::size_t>(q)] = ep.vectors;
    });
    if (check_convergence && m.ly == 0) {
        CylinderModel wide = m;
        wide.r_max += 2;
        const auto wb = make_two_body_basis(wide);
        const auto env = continuum_envelope(m);
        const double margin = 1e-6 * std::max(1.0, std::abs(m.jx));
        std::vector<double> change(ks.size(), 0.0);
        parallel_for(static_cast<int>(ks.size()), jobs, [&](int q) {
            const double kq = ks[static_cast<std::size_t>(q)];
            const auto ew = linalg::eigh(build_two_body_bloch(wide, wb, kq), false).values;
            const auto& e = s.energies[static_cast<std::size_t>(q)];
            const Eigen::MatrixXcd vecs =
                store_vectors ? s.vectors[static_cast<std::size_t>(q)] : linalg::eigh(build_two_body_bloch(m, *basis, kq)).vectors;
            double worst = 0.0;
            for (Eigen::Index i = 0; i < e.size(); ++i) {
                if (e(i) >= env.first - margin && e(i) <= env.second + margin) continue;
                // Only bound states: dominant displacement class carries >= 80% weight.
                std::map<std::pair<int, int>, double> w;
                for (std::size_t st = 0; st < basis->dim(); ++st) {
                    const auto& [x1, x2, r] = basis->states[st];
                    w[{std::abs(x2 - x1), r}] += std::norm(vecs(static_cast<Eigen::Index>(st), i));
                }
                double wmax = 0.0;
                for (const auto& kv : w) wmax = std::max(wmax, kv.second);
                if (wmax < 0.8) continue;
                double best = std::numeric_limits<double>::infinity();
                for (Eigen::Index j = 0; j < ew.size(); ++j) best = std::min(best, std::abs(e(i) - ew(j)));
                worst = std::max(worst, best);
            }
            change[static_cast<std::size_t>(q)] = worst;
        });
        s.r_max_change = *std::max_element(change.begin(), change.end());
        s.convergence_checked = true;
        if (s.r_max_change > 1e-3 * std::abs(m.jx)) {
            std::ostringstream os;
            os << "sweep_spectrum: bound energies not converged in r_max (change " << s.r_max_change << ")";
            throw NumericalError(os.str());
        }
    }
    return s;
}

std::string to_string(BoundStateLabel::Type t) {
    switch (t) {
        case BoundStateLabel::Type::I: return "I";
        case BoundStateLabel::Type::II: return "II";
        case BoundStateLabel::Type::III: return "III";
        case BoundStateLabel::Type::scattering: return "scattering";
    }
    return "scattering";
}

std::vector<double> column_density(const TwoBodyBasis& basis, const Eigen::VectorXcd& v) {
    std::vector<double> n(static_cast<std::size_t>(basis.lx), 0.0);
    for (std::size_t s = 0; s < basis.dim(); ++s) {
        const double p = std::norm(v(static_cast<Eigen::Index>(s)));
        n[static_cast<std::size_t>(basis.states[s][0])] += 0.5 * p;
        n[static_cast<std::size_t>(basis.states[s][1])] += 0.5 * p;
    }
    return n;
}

std::vector<std::vector<BoundStateLabel>> classify_states(const BlochSpectrum& s, const CylinderModel& m,
                                                          const ClassifyThresholds& th) {
    if (s.vectors.size() != s.k.size()) throw std::invalid_argument("classify_states: eigenvectors not stored");
    const auto env = continuum_envelope(m);
    const double margin = 1e-9 * std::max(1.0, std::abs(m.jx));
    const auto& b = *s.basis;
    std::vector<std::vector<BoundStateLabel>> out(s.k.size());
    for (std::size_t q = 0; q < s.k.size(); ++q) {
        const auto& vecs = s.vectors[q];
        for (Eigen::Index c = 0; c < vecs.cols(); ++c) {
            BoundStateLabel l;
            l.band = static_cast<int>(c);
            l.energy = s.energies[q](c);
            l.k = s.k[q];
            std::map<std::pair<int, int>, double> w;
            for (std::size_t st = 0; st < b.dim(); ++st) {
                const auto& [x1, x2, r] = b.states[st];
                const int dx = std::abs(x2 - x1);
                w[{dx, r}] += std::norm(vecs(static_cast<Eigen::Index>(st), c));
            }
            for (const auto& [key, val] : w)
                if (val > l.displacement_weight) {
                    l.displacement_weight = val;
                    l.displacement = key;
                }
            const auto dens = column_density(b, vecs.col(c));
            double left = 0.0, right = 0.0;
            for (int x = 0; x < m.lx; ++x) {
                if (x < th.edge_columns) left += dens[static_cast<std::size_t>(x)];
                if (x >= m.lx - th.edge_columns) right += dens[static_cast<std::size_t>(x)];
            }
            l.edge_score = std::max(left, right);
            if (l.edge_score >= th.edge && m.lx > 2 * th.edge_columns) l.edge_side = left >= right ? -1 : 1;
            const bool outside = l.energy < env.first - margin || l.energy > env.second + margin;
            if (outside && l.displacement_weight >= th.displacement) {
                const auto [dx, dy] = l.displacement;
                if (dx == 0 && dy == 2)
                    l.type = BoundStateLabel::Type::I;
                else if (dy == 0)
                    l.type = BoundStateLabel::Type::II;
                else
                    l.type = BoundStateLabel::Type::III;
            }
            out[q].push_back(l);
        }
    }
    return out;
}

BlochFn hofstadter_torus(double jx, double jy, int p, int q) {
    if (q < 1) throw std::invalid_argument("hofstadter_torus: q must be >= 1");
    const double phi = two_pi * p / q;
    return [jx, jy, phi, q](double kx, double ky) {
        Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(q, q);
        for (int x = 0; x < q; ++x) {
            h(x, x) += 2.0 * jy * std::cos(phi * x - ky);
            if (x + 1 < q) {
                h(x + 1, x) += jx;
                h(x, x + 1) += jx;
            }
        }
        h(0, q - 1) += jx * std::polar(1.0, -kx);
        h(q - 1, 0) += jx * std::polar(1.0, kx);
        return h;
    };
}

std::pair<int, int> flux_fraction(double flux, int max_q) {
    double x = flux / two_pi;
    x -= std::floor(x);
    for (int q = 1; q <= max_q; ++q) {
        const double p = std::round(x * q);
        if (std::abs(x - p / q) < 1e-9) return {static_cast<int>(p) % q, q};
    }
    throw std::invalid_argument("flux_fraction: flux is not a rational multiple of 2 pi with small denominator");
}

ChernResult chern_numbers(const BlochFn& h, const std::vector<std::vector<int>>& groups_in, int min_grid, int max_grid,
                          std::uint64_t rephase_seed) {
    const Eigen::MatrixXcd h0 = h(0.0, 0.0);
    const int nb = static_cast<int>(h0.rows());
    std::vector<std::vector<int>> groups = groups_in;
    if (groups.empty())
        for (int b = 0; b < nb; ++b) groups.push_back({b});
    for (const auto& g : groups)
        for (int b : g)
            if (b < 0 || b >= nb) throw std::invalid_argument("chern_numbers: band index out of range");

    auto compute = [&](int n, ChernResult& res) {
        std::vector<Eigen::MatrixXcd> vec(static_cast<std::size_t>(n * n));
        std::vector<Eigen::VectorXd> val(static_cast<std::size_t>(n * n));
        std::mt19937_64 rng(rephase_seed);
        std::uniform_real_distribution<double> u(0.0, two_pi);
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
                auto ep = linalg::eigh(h(two_pi * a / n, two_pi * b / n));
                if (rephase_seed != 0)
                    for (Eigen::Index c = 0; c < ep.vectors.cols(); ++c) ep.vectors.col(c) *= std::polar(1.0, u(rng));
                vec[static_cast<std::size_t>(a * n + b)] = ep.vectors;
                val[static_cast<std::size_t>(a * n + b)] = ep.values;
            }
        res.min_gap = std::numeric_limits<double>::infinity();
        for (const auto& g : groups) {
            const int lo = *std::min_element(g.begin(), g.end()), hi = *std::max_element(g.begin(), g.end());
            for (const auto& e : val) {
                if (lo > 0) res.min_gap = std::min(res.min_gap, e(lo) - e(lo - 1));
                if (hi + 1 < nb) res.min_gap = std::min(res.min_gap, e(hi + 1) - e(hi));
            }
        }
        const double scale = std::max(1.0, h0.cwiseAbs().maxCoeff());
        if (res.min_gap < 1e-8 * scale) throw NumericalError("chern_numbers: gap closes on the momentum grid");
        res.chern.clear();
        res.raw.clear();
        for (const auto& g : groups) {
            const auto gi = static_cast<Eigen::Index>(g.size());
            auto link = [&](int a, int b, int a2, int b2) {
                const auto& u1 = vec[static_cast<std::size_t>(((a % n) * n) + (b % n))];
                const auto& u2 = vec[static_cast<std::size_t>(((a2 % n) * n) + (b2 % n))];
                Eigen::MatrixXcd ov(gi, gi);
                for (Eigen::Index i = 0; i < gi; ++i)
                    for (Eigen::Index j = 0; j < gi; ++j) ov(i, j) = u1.col(g[static_cast<std::size_t>(i)]).dot(u2.col(g[static_cast<std::size_t>(j)]));
                const cplx d = ov.determinant();
                return d / std::abs(d);
            };
            double total = 0.0;
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b) {
                    const cplx ux = link(a, b, a + 1, b);
                    const cplx uy = link(a + 1, b, a + 1, b + 1);
                    const cplx ux2 = link(a, b + 1, a + 1, b + 1);
                    const cplx uy2 = link(a, b, a, b + 1);
                    total += std::arg(ux * uy / (ux2 * uy2));
                }
            // Orientation: flux +2 pi/3 (counter-clockwise plaquette phase) gives {-1, 2, -1} lowest first.
            res.raw.push_back(-total / two_pi);
            res.chern.push_back(static_cast<int>(std::lround(-total / two_pi)));
        }
        res.grid = n;
    };

    ChernResult prev;
    compute(min_grid, prev);
    for (int n = 2 * min_grid; n <= max_grid; n *= 2) {
        ChernResult cur;
        compute(n, cur);
        if (cur.chern == prev.chern) return cur;
        prev = cur;
    }
    throw NumericalError("chern_numbers: integers did not stabilize under grid refinement");
}

EffectiveModel finite_lattice(const CylinderModel& m, int nx, int ny, const std::set<int>& vacancies) {
    if (nx < 1 || ny < 1) throw ConfigError("finite_lattice: empty lattice");
    const int n = nx * ny;
    if (n > 4096) throw ConfigError("finite_lattice: more than 4096 sites");
    for (int v : vacancies)
        if (v < 0 || v >= n) throw ConfigError("finite_lattice: vacancy out of range");
    EffectiveModel em;
    em.n_sites = n;
    em.hopping = Eigen::MatrixXcd::Zero(n, n);
    em.potential = Eigen::VectorXd::Zero(n);
    em.density_interaction = Eigen::MatrixXd::Zero(n, n);
    em.vacancies.assign(vacancies.begin(), vacancies.end());
    auto vac = [&](int i) { return vacancies.count(i) != 0; };
    for (int y = 0; y < ny; ++y)
        for (int x = 0; x < nx; ++x) {
            const int i = x + nx * y;
            if (vac(i)) continue;
            if (x + 1 < nx && !vac(i + 1)) {
                em.hopping(i + 1, i) = m.jx;
                em.hopping(i, i + 1) = m.jx;
            }
            if (y + 1 < ny && !vac(i + nx)) {
                const cplx a = m.jy * std::polar(1.0, m.flux * x);
                em.hopping(i + nx, i) = a;
                em.hopping(i, i + nx) = std::conj(a);
            }
        }
    CylinderModel open = m;
    open.ly = 0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            if (vac(i) || vac(j)) continue;
            const double v = cylinder_interaction(open, j % nx - i % nx, j / nx - i / nx);
            em.density_interaction(i, j) = em.density_interaction(j, i) = v;
        }
    return em;
}

ArrayGeometry lattice_geometry(int nx, int ny) { return ArrayGeometry::rectangular(nx, ny, 1.0, 1.0); }

std::vector<int> edge_path(int nx, int ny) {
    std::vector<int> p;
    if (nx < 2 || ny < 2) throw std::invalid_argument("edge_path: lattice must be at least 2 x 2");
    for (int x = 0; x < nx; ++x) p.push_back(x);
    for (int y = 1; y < ny; ++y) p.push_back(nx - 1 + nx * y);
    for (int x = nx - 2; x >= 0; --x) p.push_back(x + nx * (ny - 1));
    for (int y = ny - 2; y >= 1; --y) p.push_back(nx * y);
    return p;
}

namespace {

int boundary_distance(int i, int nx, int ny) {
    const int x = i % nx, y = i / nx;
    return std::min({x, nx - 1 - x, y, ny - 1 - y});
}

// Path position of the nearest outer-ring site for sites within one site of the boundary, else -1.
std::vector<int> ring_projection(int nx, int ny) {
    const auto path = edge_path(nx, ny);
    std::vector<int> pos(static_cast<std::size_t>(nx * ny), -1);
    for (int i = 0; i < nx * ny; ++i) {
        if (boundary_distance(i, nx, ny) > 1) continue;
        const int x = i % nx, y = i / nx;
        int best = -1, bd = std::numeric_limits<int>::max();
        for (std::size_t k = 0; k < path.size(); ++k) {
            const int px = path[k] % nx, py = path[k] / nx;
            const int d = std::abs(px - x) + std::abs(py - y);
            if (d < bd) {
                bd = d;
                best = static_cast<int>(k);
            }
        }
        pos[static_cast<std::size_t>(i)] = best;
    }
    return pos;
}

linalg::EigenPairs window_states(const linalg::SpMat& h, double lo, double hi) {
    linalg::EigenPairs all;
    if (h.rows() <= 3000) {
        all = linalg::eigh(Eigen::MatrixXcd(h));
    } else {
        const double c = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
        int k = 24;
        for (;;) {
            all = linalg::eigs_near(h, c, k);
            if ((all.values.array() - c).abs().maxCoeff() > half || k >= h.rows()) break;
            k *= 2;
        }
    }
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < all.values.size(); ++i)
        if (all.values(i) >= lo && all.values(i) <= hi) keep.push_back(i);
    linalg::EigenPairs r;
    r.values.resize(static_cast<Eigen::Index>(keep.size()));
    r.vectors.resize(h.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t t = 0; t < keep.size(); ++t) {
        r.values(static_cast<Eigen::Index>(t)) = all.values(keep[t]);
        r.vectors.col(static_cast<Eigen::Index>(t)) = all.vectors.col(keep[t]);
    }
    return r;
}

// Unwrapped centroid angle about the lattice center and ring-projected density, per time row.
void ring_observables(const Eigen::MatrixXd& pops, int nx, int ny, std::vector<double>& winding,
                      std::vector<std::vector<double>>& edge_density) {
    const auto proj = ring_projection(nx, ny);
    const std::size_t ring = edge_path(nx, ny).size();
    const double cx = 0.5 * (nx - 1), cy = 0.5 * (ny - 1);
    double prev = 0.0;
    for (Eigen::Index t = 0; t < pops.rows(); ++t) {
        double mx = 0.0, my = 0.0;
        std::vector<double> ed(ring, 0.0);
        for (int i = 0; i < nx * ny; ++i) {
            const double p = pops(t, i);
            mx += p * (i % nx - cx);
            my += p * (i / nx - cy);
            if (proj[static_cast<std::size_t>(i)] >= 0) ed[static_cast<std::size_t>(proj[static_cast<std::size_t>(i)])] += p;
        }
        const double a = std::atan2(my, mx);
        winding.push_back(t == 0 ? a : winding.back() + std::remainder(a - prev, two_pi));
        prev = a;
        edge_density.push_back(std::move(ed));
    }
}

}  // namespace

Eigen::VectorXcd edge_seed(const SectorBasis& basis, int nx, int ny, Position center, double width,
                           std::pair<int, int> pair_offset) {
    if (basis.n_sites() != nx * ny) throw std::invalid_argument("edge_seed: basis/lattice size mismatch");
    if (!(width > 0.0)) throw std::invalid_argument("edge_seed: width must be positive");
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(basis.dim()));
    for (std::size_t a = 0; a < basis.dim(); ++a) {
        const Config c = basis.state(a);
        std::vector<int> sites;
        for (Config m = c; m; m &= m - 1) sites.push_back(__builtin_ctzll(m));
        double cx = 0.0, cy = 0.0;
        bool ok = false;
        if (sites.size() == 1) {
            ok = boundary_distance(sites[0], nx, ny) == 0;
        } else if (sites.size() == 2) {
            const int dx = sites[1] % nx - sites[0] % nx, dy = sites[1] / nx - sites[0] / nx;
            const bool match = (dx == pair_offset.first && dy == pair_offset.second) ||
                               (dx == -pair_offset.first && dy == -pair_offset.second);
            ok = match && (boundary_distance(sites[0], nx, ny) == 0 || boundary_distance(sites[1], nx, ny) == 0);
        }
        if (!ok) continue;
        for (int s : sites) {
            cx += s % nx;
            cy += s / nx;
        }
        cx /= static_cast<double>(sites.size());
        cy /= static_cast<double>(sites.size());
        const double d2 = (cx - center.x) * (cx - center.x) + (cy - center.y) * (cy - center.y);
        v(static_cast<Eigen::Index>(a)) = std::exp(-0.5 * d2 / (width * width));
    }
    if (v.norm() == 0.0) throw std::invalid_argument("edge_seed: no basis states match the seed");
    return v / v.norm();
}

PreparedState prepare_edge_mode(const EffectiveModel& m, int nx, int ny, int sector, double e_lo, double e_hi,
                                const Eigen::VectorXcd& seed, double min_edge_score) {
    if (m.n_sites != nx * ny) throw std::invalid_argument("prepare_edge_mode: model/lattice size mismatch");
    if (!(e_hi > e_lo)) throw std::invalid_argument("prepare_edge_mode: empty energy window");
    std::set<int> vac(m.vacancies.begin(), m.vacancies.end());
    auto basis = std::make_shared<SectorBasis>(SectorBasis::fixed(m.n_sites, sector, vac));
    if (seed.size() != static_cast<Eigen::Index>(basis->dim())) throw std::invalid_argument("prepare_edge_mode: seed size mismatch");
    const auto h = effective_hamiltonian(m, *basis);
    const auto win = window_states(h, e_lo, e_hi);

    std::vector<double> score(static_cast<std::size_t>(win.values.size()), 0.0);
    for (Eigen::Index c = 0; c < win.values.size(); ++c) {
        double w = 0.0;
        for (std::size_t a = 0; a < basis->dim(); ++a) {
            const double p = std::norm(win.vectors(static_cast<Eigen::Index>(a), c));
            for (Config q = basis->state(a); q; q &= q - 1)
                if (boundary_distance(__builtin_ctzll(q), nx, ny) <= 1) w += p;
        }
        score[static_cast<std::size_t>(c)] = w / sector;
    }
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(basis->dim()));
    std::vector<double> used;
    double score_sum = 0.0;
    for (Eigen::Index c = 0; c < win.values.size(); ++c) {
        const double sc = score[static_cast<std::size_t>(c)];
        if (sc < min_edge_score) continue;
        psi += sc * win.vectors.col(c).dot(seed) * win.vectors.col(c);
        used.push_back(win.values(c));
        score_sum += sc;
    }
    if (used.empty() || psi.norm() < 1e-12) throw std::invalid_argument("prepare_edge_mode: no in-gap edge states in window");
    psi /= psi.norm();
    PreparedState out;
    out.state.basis = basis;
    out.state.amp = psi;
    out.energies = Eigen::Map<Eigen::VectorXd>(used.data(), static_cast<Eigen::Index>(used.size()));
    out.window_weight = (win.vectors.adjoint() * psi).squaredNorm();
    out.mean_edge_score = score_sum / static_cast<double>(used.size());
    return out;
}

EdgeTransportResult edge_transport_scenario(const EffectiveModel& m, int nx, int ny, const StateVector& psi0,
                                            const std::vector<double>& times, std::pair<int, int> pair_offset) {
    if (!psi0.basis) throw std::invalid_argument("edge_transport_scenario: state without basis");
    const int sector = psi0.basis->min_excitations();
    if (psi0.basis->max_excitations() != sector) throw std::invalid_argument("edge_transport_scenario: state must have fixed N_r");
    EffectiveOptions opt;
    opt.store_snapshots = true;
    for (int i = 0; i < m.n_sites; ++i) opt.x_positions.push_back(i % nx);
    EdgeTransportResult r;
    r.evolution = evolve_effective(m, psi0, times, sector, opt);
    r.path = edge_path(nx, ny);
    ring_observables(r.evolution.populations, nx, ny, r.winding_angle, r.edge_density);
    const auto& basis = *r.evolution.basis;
    for (std::size_t t = 0; t < times.size(); ++t) {
        const auto row = static_cast<Eigen::Index>(t);
        if (sector >= 2) {
            const auto& psi = r.evolution.snapshots[t];
            Eigen::MatrixXd pc = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(r.path.size()), static_cast<Eigen::Index>(r.path.size()));
            std::vector<int> path_pos(static_cast<std::size_t>(m.n_sites), -1);
            for (std::size_t k = 0; k < r.path.size(); ++k) path_pos[static_cast<std::size_t>(r.path[k])] = static_cast<int>(k);
            double bound = 0.0;
            for (std::size_t a = 0; a < basis.dim(); ++a) {
                const double p = std::norm(psi(static_cast<Eigen::Index>(a)));
                if (p == 0.0) continue;
                std::vector<int> s;
                for (Config q = basis.state(a); q; q &= q - 1) s.push_back(__builtin_ctzll(q));
                for (std::size_t u = 0; u < s.size(); ++u)
                    for (std::size_t v = u + 1; v < s.size(); ++v) {
                        const int pu = path_pos[static_cast<std::size_t>(s[u])], pv = path_pos[static_cast<std::size_t>(s[v])];
                        if (pu >= 0 && pv >= 0) {
                            pc(pu, pv) += p;
                            pc(pv, pu) += p;
                        }
                    }
                if (s.size() == 2) {
                    const int dx = s[1] % nx - s[0] % nx, dy = s[1] / nx - s[0] / nx;
                    if ((dx == pair_offset.first && dy == pair_offset.second) ||
                        (dx == -pair_offset.first && dy == -pair_offset.second))
                        bound += p;
                }
            }
            r.edge_pair_correlation.push_back(std::move(pc));
            r.bound_fraction.push_back(bound / std::max(r.evolution.norm(row) * r.evolution.norm(row), 1e-300));
        }
    }
    return r;
}

namespace {
// Single-excitation Hamiltonian over the active sites; `active` receives the site of each row.
Eigen::MatrixXcd site_hamiltonian(const EffectiveModel& m, std::vector<int>& active) {
    active.clear();
    for (int i = 0; i < m.n_sites; ++i)
        if (!m.vacant(i)) active.push_back(i);
    const auto n = static_cast<Eigen::Index>(active.size());
    Eigen::MatrixXcd h(n, n);
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = 0; b < n; ++b) h(a, b) = m.hopping(active[a], active[b]);
    for (Eigen::Index a = 0; a < n; ++a) h(a, a) += m.potential(active[a]);
    return h;
}
}  // namespace

SitePacket prepare_site_edge_packet(const EffectiveModel& m, int nx, int ny, double e_lo, double e_hi, Position center,
                                    double width, double min_edge_score) {
    if (m.n_sites != nx * ny) throw std::invalid_argument("prepare_site_edge_packet: model/lattice size mismatch");
    if (!(e_hi > e_lo)) throw std::invalid_argument("prepare_site_edge_packet: empty energy window");
    if (!(width > 0.0)) throw std::invalid_argument("prepare_site_edge_packet: width must be positive");
    std::vector<int> active;
    const auto eig = linalg::eigh(site_hamiltonian(m, active));
    const auto n = static_cast<Eigen::Index>(active.size());
    Eigen::VectorXcd seed = Eigen::VectorXcd::Zero(n);
    for (Eigen::Index a = 0; a < n; ++a) {
        const int i = active[static_cast<std::size_t>(a)];
        if (boundary_distance(i, nx, ny) != 0) continue;
        const double dx = i % nx - center.x, dy = i / nx - center.y;
        seed(a) = std::exp(-0.5 * (dx * dx + dy * dy) / (width * width));
    }
    if (seed.norm() == 0.0) throw std::invalid_argument("prepare_site_edge_packet: seed misses the boundary");
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(n);
    std::vector<double> used;
    double score_sum = 0.0;
    for (Eigen::Index c = 0; c < eig.values.size(); ++c) {
        if (eig.values(c) < e_lo || eig.values(c) > e_hi) continue;
        double sc = 0.0;
        for (Eigen::Index a = 0; a < n; ++a)
            if (boundary_distance(active[static_cast<std::size_t>(a)], nx, ny) <= 1) sc += std::norm(eig.vectors(a, c));
        if (sc < min_edge_score) continue;
        psi += sc * eig.vectors.col(c).dot(seed) * eig.vectors.col(c);
        used.push_back(eig.values(c));
        score_sum += sc;
    }
    if (used.empty() || psi.norm() < 1e-12) throw std::invalid_argument("prepare_site_edge_packet: no in-gap edge states in window");
    SitePacket out;
    out.amp = Eigen::VectorXcd::Zero(m.n_sites);
    psi /= psi.norm();
    for (Eigen::Index a = 0; a < n; ++a) out.amp(active[static_cast<std::size_t>(a)]) = psi(a);
    out.energies = Eigen::Map<Eigen::VectorXd>(used.data(), static_cast<Eigen::Index>(used.size()));
    out.mean_edge_score = score_sum / static_cast<double>(used.size());
    return out;
}

SiteTransportResult site_edge_transport(const EffectiveModel& m, int nx, int ny, const Eigen::VectorXcd& psi0,
                                        const std::vector<double>& times) {
    if (m.n_sites != nx * ny || psi0.size() != m.n_sites) throw std::invalid_argument("site_edge_transport: size mismatch");
    std::vector<int> active;
    const auto eig = linalg::eigh(site_hamiltonian(m, active));
    const auto n = static_cast<Eigen::Index>(active.size());
    Eigen::VectorXcd v(n);
    for (Eigen::Index a = 0; a < n; ++a) v(a) = psi0(active[static_cast<std::size_t>(a)]);
    if (std::abs(psi0.squaredNorm() - v.squaredNorm()) > 1e-12) throw std::invalid_argument("site_edge_transport: amplitude on a vacancy");
    const Eigen::VectorXcd c = eig.vectors.adjoint() * v;
    SiteTransportResult r;
    r.times = times;
    r.path = edge_path(nx, ny);
    r.populations = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(times.size()), m.n_sites);
    for (std::size_t t = 0; t < times.size(); ++t) {
        const Eigen::VectorXcd ph = (c.array() * (eig.values.array().cast<cplx>() * cplx(0.0, -times[t])).exp()).matrix();
        const Eigen::VectorXcd psi = eig.vectors * ph;
        for (Eigen::Index a = 0; a < n; ++a) r.populations(static_cast<Eigen::Index>(t), active[static_cast<std::size_t>(a)]) = std::norm(psi(a));
    }
    ring_observables(r.populations, nx, ny, r.winding_angle, r.edge_density);
    return r;
}

double vacancy_transmission(const EffectiveModel& clean, const EffectiveModel& defect, const Eigen::VectorXcd& amp,
                            double gap_lo, double gap_hi) {
    if (clean.n_sites != defect.n_sites || amp.size() != clean.n_sites)
        throw std::invalid_argument("vacancy_transmission: size mismatch");
    if (!(gap_hi > gap_lo)) throw std::invalid_argument("vacancy_transmission: empty gap");
    Eigen::VectorXcd v = amp;
    for (int i : defect.vacancies) v(i) = 0.0;
    for (int i : clean.vacancies) v(i) = 0.0;
    if (v.norm() < 1e-12) throw std::invalid_argument("vacancy_transmission: packet vanishes on the defect lattice");
    v.normalize();
    auto in_gap = [&](const EffectiveModel& m) {
        std::vector<int> active;
        const auto eig = linalg::eigh(site_hamiltonian(m, active));
        Eigen::VectorXcd r(static_cast<Eigen::Index>(active.size()));
        for (std::size_t a = 0; a < active.size(); ++a) r(static_cast<Eigen::Index>(a)) = v(active[a]);
        const Eigen::VectorXcd c = eig.vectors.adjoint() * r;
        double w = 0.0;
        for (Eigen::Index k = 0; k < c.size(); ++k)
            if (eig.values(k) >= gap_lo && eig.values(k) <= gap_hi) w += std::norm(c(k));
        return w;
    };
    const double w0 = in_gap(clean);
    if (w0 <= 0.0) throw std::invalid_argument("vacancy_transmission: packet has no in-gap weight");
    return in_gap(defect) / w0;
}

std::string bands_csv(const BlochSpectrum& s) {
    std::ostringstream os;
    os << std::setprecision(12) << "K";
    const Eigen::Index nb = s.energies.empty() ? 0 : s.energies.front().size();
    for (Eigen::Index b = 0; b < nb; ++b) os << ",E_" << b;
    os << '\n';
    for (std::size_t q = 0; q < s.k.size(); ++q) {
        os << s.k[q];
        for (Eigen::Index b = 0; b < s.energies[q].size(); ++b) os << ',' << s.energies[q](b);
        os << '\n';
    }
    return os.str();
}

nlohmann::json classification_json(const std::vector<std::vector<BoundStateLabel>>& labels, const ClassifyThresholds& th) {
    nlohmann::json j;
    j["thresholds"] = {{"displacement_weight", th.displacement}, {"edge_weight", th.edge}, {"edge_columns", th.edge_columns}};
    nlohmann::json states = nlohmann::json::array();
    std::map<std::string, int> counts;
    for (const auto& per_k : labels)
        for (const auto& l : per_k) {
            ++counts[to_string(l.type)];
            if (!l.bound()) continue;
            states.push_back({{"K", l.k},
                              {"band", l.band},
                              {"energy", l.energy},
                              {"type", to_string(l.type)},
                              {"displacement", {l.displacement.first, l.displacement.second}},
                              {"displacement_weight", l.displacement_weight},
                              {"edge_side", l.edge_side},
                              {"edge_score", l.edge_score}});
        }
    j["counts"] = counts;
    j["bound_states"] = states;
    return j;
}

}  // namespace rydflux
