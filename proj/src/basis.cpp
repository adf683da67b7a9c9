// basis.cpp — sector basis enumeration
#include "rydflux/basis.hpp"

#include <algorithm>
#include <stdexcept>

namespace rydflux {

namespace {
void check_sites(int n_sites, const std::set<int>& vac) {
    if (n_sites < 1 || n_sites > 64) throw std::invalid_argument("SectorBasis: site count must be in [1, 64]");
    for (int v : vac)
        if (v < 0 || v >= n_sites) throw std::invalid_argument("SectorBasis: vacancy out of range");
}

// Enumerate subsets of `active` with exactly r elements, as bit masks (lexicographic by Gosper order).
void subsets(const std::vector<int>& active, int r, std::vector<Config>& out) {
    const int m = static_cast<int>(active.size());
    if (r < 0 || r > m) return;
    if (r == 0) {
        out.push_back(0);
        return;
    }
    if (r == m) {
        Config c = 0;
        for (int a : active) c |= 1ULL << a;
        out.push_back(c);
        return;
    }
    std::uint64_t x = (1ULL << r) - 1;
    // For m == 64 the loop ends through the overflow check below.
    const std::uint64_t limit = (m == 64) ? ~0ULL : (1ULL << m);
    while (x < limit) {
        Config c = 0;
        for (int b = 0; b < m; ++b)
            if (x >> b & 1ULL) c |= 1ULL << active[b];
        out.push_back(c);
        const std::uint64_t u = x & (~x + 1);
        const std::uint64_t v = x + u;
        if (v == 0) break;
        x = v + (((v ^ x) / u) >> 2);
    }
}
}  // namespace

void SectorBasis::build(int n_sites, const std::set<int>& vac, Mode mode, std::vector<int> numbers) {
    check_sites(n_sites, vac);
    mode_ = mode;
    n_sites_ = n_sites;
    vacancies_ = vac;
    for (int i = 0; i < n_sites; ++i)
        if (!vac.count(i)) active_.push_back(i);
    const int m = static_cast<int>(active_.size());
    std::sort(numbers.begin(), numbers.end());
    numbers.erase(std::unique(numbers.begin(), numbers.end()), numbers.end());
    numbers.erase(std::remove_if(numbers.begin(), numbers.end(), [m](int r) { return r < 0 || r > m; }), numbers.end());
    if (numbers.empty()) throw std::invalid_argument("SectorBasis: no admissible excitation number");
    if (mode == Mode::full && m > 26) throw std::invalid_argument("SectorBasis: full basis too large");
    for (int r : numbers) subsets(active_, r, states_);
    std::sort(states_.begin(), states_.end());
    nmin_ = numbers.front();
    nmax_ = numbers.back();
    identity_ = (mode == Mode::full && vac.empty());
}

SectorBasis SectorBasis::full(int n_sites, const std::set<int>& vacancies) {
    SectorBasis b;
    std::vector<int> all;
    for (int r = 0; r <= n_sites; ++r) all.push_back(r);
    b.build(n_sites, vacancies, Mode::full, all);
    return b;
}

SectorBasis SectorBasis::fixed(int n_sites, int n_r, const std::set<int>& vacancies) {
    SectorBasis b;
    b.build(n_sites, vacancies, Mode::fixed, {n_r});
    return b;
}

SectorBasis SectorBasis::band(int n_sites, int n0, int k, const std::set<int>& vacancies) {
    if (k < 0) throw std::invalid_argument("SectorBasis: band width must be >= 0");
    SectorBasis b;
    std::vector<int> nums;
    for (int r = n0 - k; r <= n0 + k; ++r) nums.push_back(r);
    b.build(n_sites, vacancies, Mode::band, nums);
    return b;
}

SectorBasis SectorBasis::sectors(int n_sites, const std::vector<int>& numbers, const std::set<int>& vacancies) {
    SectorBasis b;
    b.build(n_sites, vacancies, Mode::sectors, numbers);
    return b;
}

long SectorBasis::index(Config c) const {
    if (identity_) return c < states_.size() ? static_cast<long>(c) : -1;
    auto it = std::lower_bound(states_.begin(), states_.end(), c);
    if (it == states_.end() || *it != c) return -1;
    return static_cast<long>(it - states_.begin());
}

StateVector StateVector::product(std::shared_ptr<const SectorBasis> basis, Config c) {
    const long idx = basis->index(c);
    if (idx < 0) throw std::invalid_argument("StateVector::product: configuration outside basis");
    StateVector s;
    s.amp = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(basis->dim()));
    s.amp(idx) = 1.0;
    s.basis = std::move(basis);
    return s;
}

std::string bitstring(Config c, int n_sites) {
    std::string s(static_cast<std::size_t>(n_sites), '0');
    for (int i = 0; i < n_sites; ++i)
        if (c >> i & 1ULL) s[static_cast<std::size_t>(i)] = '1';
    return s;
}

}  // namespace rydflux
