// core.hpp — units, geometry, dressing configuration, interaction law and validation
#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace rydflux {

using cplx = std::complex<double>;

inline constexpr double two_pi = 2.0 * std::numbers::pi;

// Frequencies are angular, rad/us. Inputs quoted as "2pi x MHz" go through from_mhz.
inline constexpr double from_mhz(double f) noexcept { return f * two_pi; }
inline constexpr double to_mhz(double w) noexcept { return w / two_pi; }

// Failure of a numerical procedure (step control, truncation, convergence).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid or inconsistent configuration.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct Position {
    double x{0.0};
    double y{0.0};
};

struct ArrayGeometry {
    std::vector<Position> sites;          // um
    std::set<int> vacancies;
    std::optional<double> dx;             // lattice tags, um
    std::optional<double> dy;

    int size() const noexcept { return static_cast<int>(sites.size()); }
    bool vacant(int i) const { return vacancies.count(i) != 0; }
    std::vector<int> active_sites() const;
    double distance(int i, int j) const;

    // Site index = ix + nx * iy, positions (ix*dx, iy*dy).
    static ArrayGeometry rectangular(int nx, int ny, double dx, double dy);
};

// Throws ConfigError when positions coincide or vacancies are out of range.
void check_geometry(const ArrayGeometry& g);

struct InteractionLaw {
    double c6{0.0};   // rad/us * um^6, sign explicit
};

// V_ij = C6 / |r_i - r_j|^6
double pair_interaction(const ArrayGeometry& g, const InteractionLaw& law, int i, int j);

struct ColorField {
    std::string label;
    double detuning{0.0};                 // Delta_Theta, rad/us
    std::map<int, cplx> rabi;             // site -> Omega_{i,Theta}, rad/us
};

struct DressingConfig {
    std::vector<ColorField> colors;
    // Per-site detuning offsets s_i: every color on site i sees Delta_Theta + s_i.
    // Used by potential balancing and by quenched Doppler disorder.
    std::map<int, double> site_shift;

    int color_index(const std::string& label) const;   // -1 if absent
    std::vector<int> colors_at(int site) const;         // indices into colors
    double shift(int site) const;
    double detuning(int color, int site) const { return colors[color].detuning + shift(site); }
    cplx rabi(int color, int site) const;               // 0 if not dressed
    bool dressed(int site) const { return !colors_at(site).empty(); }
    double max_dressing() const;                        // max |Omega/Delta|
};

// Shared color labels of sites i and j.
std::set<std::string> channels(const DressingConfig& cfg, int i, int j);

struct NoiseSpec {
    enum class Mode { global, per_color, per_atom };
    double phase_noise_rate{0.0};   // gamma, 1/us
    Mode mode{Mode::global};
    double doppler_sigma{0.0};      // Delta_T, rad/us
    double decay_rate{0.0};         // kappa, 1/us
    std::uint64_t seed{0};
};

void check_noise(const NoiseSpec& n);
std::string to_string(NoiseSpec::Mode m);
NoiseSpec::Mode noise_mode_from_string(const std::string& s);

struct Diagnostics {
    double max_dressing{0.0};        // max |Omega/Delta|
    double min_detuning_gap{0.0};    // min |Delta_Theta - Delta_Theta'|, inf for one color
    double max_crosstalk{0.0};       // max |J| / min gap
    std::vector<std::string> warnings;
};

// Hard errors (ConfigError) for singular or inconsistent input; soft issues as warnings.
Diagnostics validate(const ArrayGeometry& g, const DressingConfig& cfg, const InteractionLaw& law);

}  // namespace rydflux
