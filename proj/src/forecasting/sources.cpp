#include <cmath>
#include <numbers>

#include "chaoslab/error.hpp"
#include "chaoslab/forecasting.hpp"
#include "chaoslab/runio.hpp"

namespace chaoslab::forecast {

double component_initial_state(const AggregateComponent& c) {
    return 0.05 + 0.9 * runio::rng_value(c.seed, runio::CounterKey{runio::Stream::Aggregate, 0});
}

std::vector<AggregateComponent> independent_logistic(std::size_t k, double a,
                                                     std::uint64_t base_seed) {
    if (k < 1) throw DomainError("aggregate needs at least one component");
    const auto spec = maps::MapSpec::logistic(a);
    std::vector<AggregateComponent> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) out.push_back({spec, base_seed + i});
    return out;
}

Series sum_series(std::span<const std::vector<double>> orbits) {
    if (orbits.empty()) throw DomainError("aggregate needs at least one component");
    const std::size_t n = orbits.front().size();
    Series s;
    s.values.assign(n, 0.0);
    for (const auto& o : orbits) {
        if (o.size() != n) throw DomainError("component length mismatch");
        for (std::size_t i = 0; i < n; ++i) s.values[i] += o[i];
    }
    s.label = "sum of " + std::to_string(orbits.size()) + " orbits";
    return s;
}

Series aggregate_series(std::span<const AggregateComponent> components, std::size_t length,
                        std::size_t transient) {
    if (components.empty()) throw DomainError("aggregate needs at least one component");
    std::vector<std::vector<double>> orbits;
    orbits.reserve(components.size());
    for (const auto& c : components)
        orbits.push_back(maps::iterate(c.map, component_initial_state(c), length, transient).samples);
    Series s = sum_series(orbits);
    s.label = "aggregate k=" + std::to_string(components.size());
    return s;
}

std::vector<AggregationPoint> aggregation_experiment(std::span<const std::size_t> k_values,
                                                     const AggregationSettings& settings) {
    if (settings.replicates < 1) throw DomainError("aggregation needs at least one replicate");
    if (settings.horizon < 1) throw DomainError("aggregation horizon must be at least 1");
    std::vector<AggregationPoint> out;
    for (std::size_t k : k_values) {
        AggregationPoint pt;
        pt.k = k;
        double total = 0.0;
        for (std::size_t r = 0; r < settings.replicates; ++r) {
            auto comps = independent_logistic(k, settings.a, settings.base_seed + r * 100003);
            auto curve = rho_curve(aggregate_series(comps, settings.length), settings.embedding,
                                   settings.horizon);
            const double rho = curve.rho(settings.horizon);
            pt.replicate_rho.push_back(rho);
            total += rho;
        }
        pt.mean_rho = total / static_cast<double>(settings.replicates);
        out.push_back(std::move(pt));
    }
    return out;
}

Series map_series(const maps::MapSpec& spec, std::size_t length, double x0,
                  std::size_t transient) {
    return {maps::iterate(spec, x0, length, transient).samples,
            spec.kind == maps::MapKind::Logistic ? "logistic" : "ricker"};
}

Series uniform_noise(std::size_t length, std::uint64_t seed) {
    runio::CounterStream rng(seed, runio::Stream::Synthetic);
    Series s{std::vector<double>(length), "uniform noise"};
    for (auto& v : s.values) v = rng.next();
    return s;
}

Series sine_series(std::size_t length, double samples_per_period, double amplitude) {
    if (!(samples_per_period > 0.0)) throw DomainError("samples per period must be positive");
    Series s{std::vector<double>(length), "sine"};
    for (std::size_t t = 0; t < length; ++t)
        s.values[t] = amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) /
                                           samples_per_period);
    return s;
}

Series ar1_series(std::size_t length, double phi, double noise_sd, std::uint64_t seed) {
    if (!(std::fabs(phi) < 1.0)) throw DomainError("AR(1) needs |phi| < 1");
    runio::CounterStream rng(seed, runio::Stream::Synthetic);
    Series s{std::vector<double>(length), "ar1"};
    double x = 0.0;
    for (int i = 0; i < 100; ++i) x = phi * x + noise_sd * rng.next_normal();
    for (auto& v : s.values) {
        x = phi * x + noise_sd * rng.next_normal();
        v = x;
    }
    return s;
}

}  // namespace chaoslab::forecast
