// basis.hpp — bit-encoded excitation configurations and sector bases
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <set>
#include <string>
#include <vector>

namespace rydflux {

using Config = std::uint64_t;   // bit i set <=> site i excited

class SectorBasis {
public:
    enum class Mode { full, fixed, band, sectors };

    // All configurations of the active sites.
    static SectorBasis full(int n_sites, const std::set<int>& vacancies = {});
    // Exactly n_r excitations.
    static SectorBasis fixed(int n_sites, int n_r, const std::set<int>& vacancies = {});
    // |N_r - n0| <= k.
    static SectorBasis band(int n_sites, int n0, int k, const std::set<int>& vacancies = {});
    // Union of the listed excitation numbers.
    static SectorBasis sectors(int n_sites, const std::vector<int>& numbers, const std::set<int>& vacancies = {});

    Mode mode() const noexcept { return mode_; }
    int n_sites() const noexcept { return n_sites_; }
    const std::set<int>& vacancies() const noexcept { return vacancies_; }
    const std::vector<int>& active_sites() const noexcept { return active_; }
    std::size_t dim() const noexcept { return states_.size(); }
    Config state(std::size_t idx) const { return states_[idx]; }
    const std::vector<Config>& states() const noexcept { return states_; }
    // Index of configuration c, or -1 if outside the basis.
    long index(Config c) const;
    bool contains(Config c) const { return index(c) >= 0; }
    int min_excitations() const noexcept { return nmin_; }
    int max_excitations() const noexcept { return nmax_; }

private:
    SectorBasis() = default;
    void build(int n_sites, const std::set<int>& vac, Mode mode, std::vector<int> numbers);

    Mode mode_{Mode::full};
    int n_sites_{0};
    std::set<int> vacancies_;
    std::vector<int> active_;
    std::vector<Config> states_;
    bool identity_{false};   // index == configuration (full mode, no vacancies)
    int nmin_{0}, nmax_{0};
};

inline int popcount(Config c) noexcept { return __builtin_popcountll(c); }

struct StateVector {
    std::shared_ptr<const SectorBasis> basis;
    Eigen::VectorXcd amp;

    // Computational basis state.
    static StateVector product(std::shared_ptr<const SectorBasis> basis, Config c);
    double norm() const { return amp.norm(); }
};

std::string bitstring(Config c, int n_sites);

}  // namespace rydflux
