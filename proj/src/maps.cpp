#include "chaoslab/maps.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "chaoslab/error.hpp"
#include "chaoslab/parallel.hpp"

namespace chaoslab::maps {

namespace {

void check_state(const MapSpec& spec, double x) {
    if (!std::isfinite(x)) throw DomainError("initial state must be finite");
    if (spec.kind == MapKind::Logistic && (x < 0.0 || x > 1.0))
        throw DomainError("logistic state must lie in [0, 1], got " + std::to_string(x));
    if (spec.kind == MapKind::Ricker && x < 0.0)
        throw DomainError("ricker state must be nonnegative, got " + std::to_string(x));
}

double log_slope(const MapSpec& spec, double x, std::size_t& clamped) {
    const double s = std::fabs(spec.slope(x));
    if (s == 0.0) {
        ++clamped;
        return kLogSlopeFloor;
    }
    return std::max(std::log(s), kLogSlopeFloor);
}

}  // namespace

MapSpec MapSpec::logistic(double a) {
    MapSpec s;
    s.kind = MapKind::Logistic;
    s.a = a;
    s.validate();
    return s;
}

MapSpec MapSpec::ricker(double r0, double scale) {
    MapSpec s;
    s.kind = MapKind::Ricker;
    s.r0 = r0;
    s.scale = scale;
    s.validate();
    return s;
}

void MapSpec::validate() const {
    if (kind == MapKind::Logistic) {
        if (!(a > 0.0 && a <= 4.0))
            throw DomainError("logistic parameter a must lie in (0, 4], got " + std::to_string(a));
    } else {
        if (!(r0 > 0.0) || !std::isfinite(r0))
            throw DomainError("ricker R0 must be positive, got " + std::to_string(r0));
        if (!(scale > 0.0) || !std::isfinite(scale))
            throw DomainError("ricker scale must be positive, got " + std::to_string(scale));
    }
}

double MapSpec::apply(double x) const noexcept {
    // a*(x*(1-x)) keeps the logistic image inside [0, 1] under rounding
    if (kind == MapKind::Logistic) return a * (x * (1.0 - x));
    return r0 * x * std::exp(-scale * x);
}

double MapSpec::slope(double x) const noexcept {
    if (kind == MapKind::Logistic) return a * (1.0 - 2.0 * x);
    return r0 * std::exp(-scale * x) * (1.0 - scale * x);
}

MapSpec MapSpec::with_control(double value) const {
    MapSpec s = *this;
    if (kind == MapKind::Logistic)
        s.a = value;
    else
        s.r0 = value;
    s.validate();
    return s;
}

Orbit iterate(const MapSpec& spec, double x0, std::size_t n, std::size_t transient) {
    spec.validate();
    check_state(spec, x0);
    if (n < 1) throw DomainError("orbit length must be at least 1");
    Orbit orbit;
    orbit.x0 = x0;
    orbit.transient = transient;
    orbit.samples.reserve(n);
    double x = x0;
    for (std::size_t i = 0; i < transient + n; ++i) {
        x = spec.apply(x);
        if (!std::isfinite(x)) throw NumericError("non-finite iterate", i + 1);
        if (i >= transient) orbit.samples.push_back(x);
    }
    return orbit;
}

LyapunovEstimate lyapunov(const MapSpec& spec, double x0, std::size_t n, std::size_t transient,
                          std::optional<std::size_t> window) {
    if (n < 1000) throw DomainError("lyapunov estimate needs at least 1000 iterates");
    if (window && (*window < 10 || *window > n))
        throw DomainError("lyapunov window must lie in [10, n]");
    spec.validate();
    check_state(spec, x0);

    LyapunovEstimate est;
    est.n_iterates = n;
    double x = x0;
    for (std::size_t i = 0; i < transient; ++i) {
        x = spec.apply(x);
        if (!std::isfinite(x)) throw NumericError("non-finite iterate", i + 1);
    }

    // terms are kept only when a window series is requested
    std::vector<double> terms;
    if (window) terms.reserve(n);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double term = log_slope(spec, x, est.clamped);
        sum += term;
        if (window) terms.push_back(term);
        x = spec.apply(x);
        if (!std::isfinite(x)) throw NumericError("non-finite iterate", transient + i + 1);
    }
    est.lambda = sum / static_cast<double>(n);

    if (window) {
        const std::size_t w = *window;
        est.window_series.reserve(n - w + 1);
        // each window summed directly so entries do not accumulate drift
        for (std::size_t start = 0; start + w <= n; ++start) {
            double s = 0.0;
            for (std::size_t j = start; j < start + w; ++j) s += terms[j];
            est.window_series.push_back(s / static_cast<double>(w));
        }
    }
    return est;
}

double lyapunov_horizon(double lambda, double epsilon) {
    if (!(lambda > 0.0))
        throw DomainError("not chaotic: horizon undefined for lambda <= 0");
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw DomainError("initial uncertainty must lie in (0, 1)");
    return std::log(1.0 / epsilon) / lambda;
}

std::vector<double> parameter_grid(double lo, double hi, std::size_t n_params) {
    if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi)
        throw DomainError("invalid parameter range");
    if (lo == hi) return {lo};
    if (n_params < 2) throw DomainError("a nondegenerate range needs at least 2 parameters");
    std::vector<double> grid(n_params);
    const double step = (hi - lo) / static_cast<double>(n_params - 1);
    for (std::size_t i = 0; i < n_params; ++i) grid[i] = lo + step * static_cast<double>(i);
    grid.back() = hi;
    return grid;
}

std::vector<ScanColumn> bifurcation_scan(const MapSpec& tmpl, double lo, double hi,
                                         std::size_t n_params, std::size_t settle,
                                         std::size_t keep, double x0) {
    const auto grid = parameter_grid(lo, hi, n_params);
    std::vector<MapSpec> specs;
    specs.reserve(grid.size());
    for (double p : grid) specs.push_back(tmpl.with_control(p));
    if (keep < 1) throw DomainError("scan must keep at least one sample");

    std::vector<ScanColumn> columns(grid.size());
    parallel::for_range(
        grid.size(),
        [&](std::size_t b, std::size_t e) {
            for (std::size_t i = b; i < e; ++i)
                columns[i] = {grid[i], iterate(specs[i], x0, keep, settle).samples};
        },
        2);
    return columns;
}

std::vector<LyapunovPoint> lyapunov_scan(const MapSpec& tmpl, double lo, double hi,
                                         std::size_t n_params, std::size_t n,
                                         std::size_t transient, double x0) {
    const auto grid = parameter_grid(lo, hi, n_params);
    std::vector<MapSpec> specs;
    specs.reserve(grid.size());
    for (double p : grid) specs.push_back(tmpl.with_control(p));

    std::vector<LyapunovPoint> out(grid.size());
    parallel::for_range(
        grid.size(),
        [&](std::size_t b, std::size_t e) {
            for (std::size_t i = b; i < e; ++i)
                out[i] = {grid[i], lyapunov(specs[i], x0, n, transient).lambda};
        },
        2);
    return out;
}

std::optional<double> chaos_onset(std::span<const LyapunovPoint> scan) {
    std::optional<double> best;
    for (const auto& p : scan)
        if (p.lambda > 0.0 && (!best || p.param < *best)) best = p.param;
    return best;
}

std::size_t Histogram::occupied_bins() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(mass.begin(), mass.end(), [](double m) { return m > 0.0; }));
}

Histogram density_histogram(std::span<const double> samples, std::size_t bins, double lo,
                            double hi) {
    if (bins < 8) throw DomainError("histogram needs at least 8 bins");
    if (!(lo < hi)) throw DomainError("histogram range must satisfy lo < hi");
    if (samples.size() < bins)
        throw DomainError("orbit too short: " + std::to_string(samples.size()) +
                          " samples for " + std::to_string(bins) + " bins");
    std::vector<std::size_t> counts(bins, 0);
    const double width = hi - lo;
    for (double x : samples) {
        if (!(x >= lo && x <= hi))
            throw DomainError("sample " + std::to_string(x) + " outside histogram range");
        auto idx = static_cast<std::size_t>((x - lo) / width * static_cast<double>(bins));
        counts[std::min(idx, bins - 1)]++;
    }
    Histogram h{lo, hi, std::vector<double>(bins)};
    for (std::size_t i = 0; i < bins; ++i)
        h.mass[i] = static_cast<double>(counts[i]) / static_cast<double>(samples.size());
    return h;
}

std::vector<double> arcsine_reference(std::size_t bins) {
    if (bins < 1) throw DomainError("reference needs at least one bin");
    // CDF of the arcsine law is (2/pi) asin(sqrt(x))
    auto cdf = [](double x) { return 2.0 / std::numbers::pi * std::asin(std::sqrt(x)); };
    std::vector<double> ref(bins);
    for (std::size_t i = 0; i < bins; ++i) {
        const double a = static_cast<double>(i) / static_cast<double>(bins);
        const double b = static_cast<double>(i + 1) / static_cast<double>(bins);
        ref[i] = cdf(b) - cdf(a);
    }
    return ref;
}

std::vector<double> uniform_reference(std::size_t bins) {
    if (bins < 1) throw DomainError("reference needs at least one bin");
    return std::vector<double>(bins, 1.0 / static_cast<double>(bins));
}

std::vector<double> arcsine_transform(std::span<const double> samples) {
    std::vector<double> out;
    out.reserve(samples.size());
    for (double x : samples) {
        if (!(x >= 0.0 && x <= 1.0)) throw DomainError("arcsine transform needs x in [0, 1]");
        out.push_back(2.0 / std::numbers::pi * std::asin(std::sqrt(x)));
    }
    return out;
}

double l1_distance(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) throw DomainError("distributions differ in length");
    double d = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) d += std::fabs(p[i] - q[i]);
    return d;
}

}  // namespace chaoslab::maps
