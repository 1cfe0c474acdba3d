#pragma once

// Host-parasitoid coupled map lattice. Every generation each patch runs
// Nicholson-Bailey dynamics
//
//   H' = R0 * H * exp(-a*P)
//   P' = c * H * (1 - exp(-a*P))
//
// after which a fraction mu_H of hosts and mu_P of parasitoids leaves every
// patch, split evenly over its eight Moore neighbours.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "chaoslab/runio.hpp"

namespace chaoslab::lattice {

struct PatchParams {
    double r0 = 2.0;
    double attack = 1.0;
    double c = 1.0;

    void validate() const;
};

struct Densities {
    double h = 0.0;
    double p = 0.0;
};

Densities local_update(double h, double p, const PatchParams& params) noexcept;

// Positive fixed point; throws DomainError when R0 <= 1.
Densities nb_equilibrium(const PatchParams& params);

enum class Boundary { Cyclic, Absorbing, Redistribute };

std::string_view to_string(Boundary b) noexcept;
Boundary parse_boundary(std::string_view text);

// Row-major n x n grid. Reads `grid`, returns a fresh grid.
std::vector<double> disperse(std::span<const double> grid, std::size_t n, double mu,
                             Boundary boundary);

// Equilibrium densities times independent uniform factors in [lo, hi].
struct RandomAroundEquilibrium {
    double lo = 0.9;
    double hi = 1.1;
    std::uint64_t seed = 1;
};

// (h0, p0) in the patch at (n/2, n/2), empty elsewhere.
struct CentralSeed {
    double h0 = 0.0;
    double p0 = 0.0;
};

struct ExplicitState {
    std::vector<double> h;
    std::vector<double> p;
};

using Init = std::variant<RandomAroundEquilibrium, CentralSeed, ExplicitState>;

struct LatticeConfig {
    std::size_t n = 30;
    double mu_h = 1.0;
    double mu_p = 0.89;
    Boundary boundary = Boundary::Cyclic;
    Init init = RandomAroundEquilibrium{};
    std::size_t steps = 2000;
    // global mean H below this ends the run as extinct; default 1e-10 * H*
    std::optional<double> extinction_eps;

    void validate() const;
};

struct LatticeState {
    std::size_t n = 0;
    std::size_t t = 0;
    std::vector<double> h;
    std::vector<double> p;
};

LatticeState initial_state(const LatticeConfig& config, const PatchParams& params);

// One generation: local dynamics on every patch, then host dispersal, then
// parasitoid dispersal.
LatticeState advance(const LatticeState& state, const LatticeConfig& config,
                     const PatchParams& params);

struct RecordOptions {
    std::size_t frames_every = 0;  // 0 = no frames; frames include t = 0
};

struct RunRecord {
    // indexed by generation 0..(generations run)
    std::vector<double> mean_h;
    std::vector<double> mean_p;
    // stasis[t] = max over patches of max(|H_t - H_{t-1}|, |P_t - P_{t-1}|);
    // stasis[0] is 0 by convention
    std::vector<double> stasis;
    // population variance of H over patches at each generation
    std::vector<double> spatial_var_h;
    LatticeState final_state;
    std::vector<LatticeState> frames;
    Densities equilibrium;
    double extinction_eps = 0.0;
    std::size_t steps_requested = 0;
    bool extinct = false;
};

// Grayscale frame shaded relative to the equilibrium densities.
runio::Frame render_frame(const LatticeState& state, const Densities& equilibrium);

// Throws NumericError carrying the generation if any density becomes
// non-finite or exceeds 1e300.
RunRecord simulate(const LatticeConfig& config, const PatchParams& params,
                   const RecordOptions& options = {});

enum class Regime { Extinct, StaticHeterogeneous, PersistentOscillatory };

std::string_view to_string(Regime r) noexcept;

struct RegimeThresholds {
    double stasis_tolerance = 1e-8;
    double transient_fraction = 0.5;
    std::size_t min_post_transient = 500;
    // spatial variance at or below this counts as homogeneous
    double homogeneity_tolerance = 1e-20;
};

struct RegimeReport {
    Regime label = Regime::PersistentOscillatory;
    std::size_t generations = 0;
    std::size_t post_transient = 0;
    double temporal_variance = 0.0;  // of mean H after the transient
    double spatial_variance = 0.0;   // of H in the final state
    double stasis_residual = 0.0;    // max stasis after the transient
    double min_mean_h = 0.0;         // after the transient
    double max_mean_h = 0.0;
    std::size_t dominant_period = 0;  // 0 when no periodicity is detected
};

// Throws DomainError if a non-extinct run has fewer than
// min_post_transient generations after the transient.
RegimeReport classify_regime(const RunRecord& record, const RegimeThresholds& thresholds = {});

// Lag of the first positive local maximum of the autocorrelation of
// `series`, or 0 when there is none.
std::size_t dominant_period(std::span<const double> series);

}  // namespace chaoslab::lattice
