#pragma once

// One-dimensional maps x -> F(x): the logistic (quadratic) map a*x*(1-x) and
// the Ricker map R0*N*exp(-scale*N), with Lyapunov exponents, predictability
// horizons, bifurcation scans and invariant-density histograms.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace chaoslab::maps {

inline constexpr std::size_t kDefaultTransient = 1000;
inline constexpr double kDefaultScanX0 = 0.3;
// ln|F'| is clamped at this value on exactly zero slope.
inline constexpr double kLogSlopeFloor = -690.7755278982137;  // ln(1e-300)

enum class MapKind { Logistic, Ricker };

struct MapSpec {
    MapKind kind = MapKind::Logistic;
    double a = 4.0;       // logistic control parameter, 0 < a <= 4
    double r0 = 20.0;     // ricker intrinsic rate, > 0
    double scale = 1.0;   // ricker density scale, > 0

    static MapSpec logistic(double a);
    static MapSpec ricker(double r0, double scale = 1.0);

    // Throws DomainError on an invalid parameter.
    void validate() const;

    double apply(double x) const noexcept;
    double slope(double x) const noexcept;

    // The scanned control parameter: a for logistic, r0 for ricker.
    double control() const noexcept { return kind == MapKind::Logistic ? a : r0; }
    MapSpec with_control(double value) const;
};

struct Orbit {
    std::vector<double> samples;
    double x0 = 0.0;
    std::size_t transient = 0;
};

Orbit iterate(const MapSpec& spec, double x0, std::size_t n,
              std::size_t transient = kDefaultTransient);

struct LyapunovEstimate {
    double lambda = 0.0;           // nats per iterate
    std::size_t n_iterates = 0;
    std::size_t clamped = 0;       // zero-slope terms replaced by kLogSlopeFloor
    std::vector<double> window_series;  // sliding-window means when requested
};

// Mean of ln|F'(x_t)| over n iterates after `transient`. Requires n >= 1000
// and, when given, window >= 10 and window <= n.
LyapunovEstimate lyapunov(const MapSpec& spec, double x0, std::size_t n,
                          std::size_t transient = kDefaultTransient,
                          std::optional<std::size_t> window = std::nullopt);

// ln(1/epsilon)/lambda; throws DomainError("not chaotic ...") for lambda <= 0.
double lyapunov_horizon(double lambda, double epsilon);

struct ScanColumn {
    double param = 0.0;
    std::vector<double> samples;
};

// Evenly spaced control values in [lo, hi]; lo == hi yields one column.
std::vector<double> parameter_grid(double lo, double hi, std::size_t n_params);

// For each control value, iterate `settle` steps from x0 then keep `keep`
// samples. Columns are ordered by parameter regardless of thread schedule.
std::vector<ScanColumn> bifurcation_scan(const MapSpec& tmpl, double lo, double hi,
                                         std::size_t n_params, std::size_t settle,
                                         std::size_t keep, double x0 = kDefaultScanX0);

struct LyapunovPoint {
    double param = 0.0;
    double lambda = 0.0;
};

std::vector<LyapunovPoint> lyapunov_scan(const MapSpec& tmpl, double lo, double hi,
                                         std::size_t n_params, std::size_t n,
                                         std::size_t transient = kDefaultTransient,
                                         double x0 = kDefaultScanX0);

// Smallest scanned parameter with lambda > 0, if any.
std::optional<double> chaos_onset(std::span<const LyapunovPoint> scan);

struct Histogram {
    double lo = 0.0;
    double hi = 1.0;
    std::vector<double> mass;  // sums to 1
    std::size_t occupied_bins() const noexcept;
};

// Requires bins >= 8 and at least `bins` samples. Values equal to hi are
// counted in the last bin; values outside [lo, hi] are rejected.
Histogram density_histogram(std::span<const double> samples, std::size_t bins,
                            double lo = 0.0, double hi = 1.0);

// Bin masses of the density 1/(pi*sqrt(x(1-x))) on equal bins of [0, 1].
std::vector<double> arcsine_reference(std::size_t bins);
std::vector<double> uniform_reference(std::size_t bins);

// (2/pi)*asin(sqrt(x)): maps the a=4 invariant density to the uniform one.
std::vector<double> arcsine_transform(std::span<const double> samples);

double l1_distance(std::span<const double> p, std::span<const double> q);

}  // namespace chaoslab::maps
