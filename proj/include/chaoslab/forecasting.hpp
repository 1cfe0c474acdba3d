#pragma once

// Nonlinear forecasting by simplex projection on delay embeddings.
//
// A series is embedded as points {x_t, x_{t-tau}, ..., x_{t-(E-1)tau}}. To
// forecast p steps ahead from a predictee we take its E+1 nearest library
// points, follow each one p steps forward in the series, and average those
// continuations with weights exp(-d_i/d_1). The Pearson correlation between
// forecasts and observations as a function of p (the rho curve) separates
// low-dimensional chaos (decaying skill) from noise (no skill) and from
// noisy periodicity (flat, high skill).

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "chaoslab/maps.hpp"

namespace chaoslab::forecast {

struct Series {
    std::vector<double> values;
    std::string label;

    // length >= 2 and all values finite
    void validate() const;
};

enum class Protocol {
    HalfSplitForward,   // library from the first half, predict the second
    HalfSplitBackward,  // library from the second half, predict the first
    FullWithExclusion,  // library from everything, minus a window around each predictee
};

std::string_view to_string(Protocol p) noexcept;
Protocol parse_protocol(std::string_view text);

struct EmbeddingConfig {
    std::size_t E = 3;
    std::size_t tau = 1;
    std::size_t exclusion = 0;  // half-width, in steps
    Protocol protocol = Protocol::HalfSplitForward;

    void validate() const;
};

// Delay vectors over one contiguous segment [begin, end) of a series. Point
// i has time index times()[i] (a global series index) and coordinates
// x_t, x_{t-tau}, ... all drawn from inside the segment.
class Library {
public:
    Library(std::shared_ptr<const std::vector<double>> data, std::size_t E, std::size_t tau,
            std::size_t segment_begin, std::size_t segment_end, std::vector<std::size_t> times);

    std::size_t size() const noexcept { return times_.size(); }
    std::size_t dimension() const noexcept { return E_; }
    std::size_t lag() const noexcept { return tau_; }
    std::size_t segment_begin() const noexcept { return begin_; }
    std::size_t segment_end() const noexcept { return end_; }
    std::size_t time(std::size_t i) const { return times_.at(i); }
    std::span<const std::size_t> times() const noexcept { return times_; }
    std::span<const double> point(std::size_t i) const {
        return {coords_.data() + i * E_, E_};
    }
    std::span<const double> data() const noexcept { return *data_; }

private:
    std::shared_ptr<const std::vector<double>> data_;
    std::size_t E_;
    std::size_t tau_;
    std::size_t begin_;
    std::size_t end_;
    std::vector<std::size_t> times_;
    std::vector<double> coords_;
};

// {x_t, x_{t-tau}, ..., x_{t-(E-1)tau}}; requires t >= (E-1)*tau.
std::vector<double> delay_vector(std::span<const double> data, std::size_t t, std::size_t E,
                                 std::size_t tau);

// Library over the whole series: length - (E-1)*tau points.
Library embed(const Series& series, std::size_t E, std::size_t tau);
Library embed_segment(std::shared_ptr<const std::vector<double>> data, std::size_t E,
                      std::size_t tau, std::size_t begin, std::size_t end);

struct Neighbor {
    std::size_t time = 0;
    double distance = 0.0;
    double weight = 0.0;
};

struct Projection {
    double value = 0.0;
    std::vector<Neighbor> neighbors;  // nearest first
};

// Eligible neighbours: library points whose p-step continuation stays inside
// the library segment and, when query_time is given, whose time index lies
// outside [query_time - exclusion, query_time + exclusion]. Needs at least
// E+2 eligible points. Distance ties go to the smaller time index.
Projection simplex_project(const Library& library, std::span<const double> query,
                           std::optional<std::size_t> query_time, std::size_t p,
                           std::size_t exclusion);

double simplex_predict(const Library& library, std::span<const double> query,
                       std::optional<std::size_t> query_time, std::size_t p,
                       std::size_t exclusion);

// Pearson correlation; nullopt when either side has zero variance or the
// inputs have fewer than two points.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

inline constexpr std::size_t kMinPredictions = 10;

struct RhoPoint {
    std::size_t tp = 0;
    double rho = 0.0;  // NaN when undefined
    std::size_t n = 0;
    bool defined = false;
};

struct RhoCurve {
    std::vector<RhoPoint> points;  // tp = 1..p_max
    // Least-squares slope of ln(rho) against T_p over the leading run of
    // positive rho values; NaN with fewer than two such points.
    double decay_rate = 0.0;

    std::size_t p_max() const noexcept { return points.size(); }
    // 1-based; NaN if undefined
    double rho(std::size_t tp) const;
};

double log_rho_slope(std::span<const RhoPoint> points);

RhoCurve rho_curve(const Series& series, const EmbeddingConfig& config, std::size_t p_max);

struct GridScore {
    std::size_t E = 0;
    std::size_t tau = 0;
    double score = 0.0;  // rho(p_eval), NaN if undefined
    bool admissible = false;
};

struct GridSearchResult {
    std::size_t E = 0;
    std::size_t tau = 0;
    double score = 0.0;
    std::vector<GridScore> table;  // every pair, E-major
};

// Maximises rho(p_eval); ties go to smaller E, then smaller tau. Pairs the
// series cannot support are recorded as inadmissible.
GridSearchResult grid_search(const Series& series, std::span<const std::size_t> E_values,
                             std::span<const std::size_t> tau_values,
                             const EmbeddingConfig& tmpl, std::size_t p_eval);

// Global linear autoregression with intercept, fitted by least squares on
// the protocol's library segment and iterated p steps ahead over the same
// predictees as rho_curve with E = order, tau = 1. Singular normal equations
// fall back to a ridge of 1e-8 * trace.
RhoCurve ar_rho_curve(const Series& series, std::size_t order, Protocol protocol,
                      std::size_t p_max);

struct ArModel {
    double intercept = 0.0;
    std::vector<double> coefficients;  // lag 1 first
    bool ridge = false;
};

ArModel fit_ar(std::span<const double> values, std::size_t order);

enum class Verdict { ChaosLike, NoiseLike, PeriodicPlusNoise, Inconclusive };

std::string_view to_string(Verdict v) noexcept;

// Calibration thresholds; these are conventions, not derived quantities.
struct ClassifyThresholds {
    double skill = 0.5;       // rho(1) needed for chaos-like or periodic
    double decay = 0.3;       // rho(1) - rho(p_max) for chaos-like
    double noise = 0.2;       // max |rho| below this is noise-like
    double flatness = 0.1;    // rho range below this is periodic-plus-noise
};

struct Classification {
    Verdict verdict = Verdict::Inconclusive;
    double rho_first = 0.0;
    double rho_last = 0.0;
    double max_abs_rho = 0.0;
    double rho_range = 0.0;
    std::optional<double> baseline_margin;  // rho(1) - baseline rho(1)
};

// Undefined points are skipped. Requires p_max >= 5.
Classification classify(const RhoCurve& curve, const RhoCurve* baseline = nullptr,
                        const ClassifyThresholds& thresholds = {});

// ---------------------------------------------------------------------------
// Series sources
// ---------------------------------------------------------------------------

struct AggregateComponent {
    maps::MapSpec map;
    std::uint64_t seed = 0;  // determines the initial state
};

// Initial state drawn from (0.05, 0.95) by the component's seed.
double component_initial_state(const AggregateComponent& c);

// k logistic maps at parameter a with seeds base_seed, base_seed+1, ...
std::vector<AggregateComponent> independent_logistic(std::size_t k, double a,
                                                     std::uint64_t base_seed);

// Elementwise sum of the components' orbits.
Series aggregate_series(std::span<const AggregateComponent> components, std::size_t length,
                        std::size_t transient = maps::kDefaultTransient);

Series sum_series(std::span<const std::vector<double>> orbits);

struct AggregationSettings {
    double a = 4.0;
    std::size_t length = 10000;
    std::size_t replicates = 8;
    std::uint64_t base_seed = 1;
    EmbeddingConfig embedding;
    std::size_t horizon = 1;  // rho is read at this T_p
};

struct AggregationPoint {
    std::size_t k = 0;
    double mean_rho = 0.0;
    std::vector<double> replicate_rho;
};

// Mean rho(horizon) of summed independent logistic maps, per k. Replicate r
// uses component seeds starting at base_seed + r * 100003, so the
// replicates share no component.
std::vector<AggregationPoint> aggregation_experiment(std::span<const std::size_t> k_values,
                                                     const AggregationSettings& settings = {});

Series map_series(const maps::MapSpec& spec, std::size_t length, double x0 = maps::kDefaultScanX0,
                  std::size_t transient = maps::kDefaultTransient);
Series uniform_noise(std::size_t length, std::uint64_t seed);
Series sine_series(std::size_t length, double samples_per_period, double amplitude = 1.0);
// x_{t+1} = phi*x_t + noise_sd*z_t, started from 0 with a 100-step burn-in
Series ar1_series(std::size_t length, double phi, double noise_sd, std::uint64_t seed);

}  // namespace chaoslab::forecast
