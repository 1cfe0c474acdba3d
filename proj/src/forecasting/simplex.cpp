#include <algorithm>
#include <cmath>
#include <limits>

#include "chaoslab/error.hpp"
#include "chaoslab/forecasting.hpp"
#include "chaoslab/parallel.hpp"
#include "protocol.hpp"

namespace chaoslab::forecast {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Candidate {
    double distance;
    std::size_t time;
    std::size_t index;
};

bool closer(const Candidate& a, const Candidate& b) noexcept {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.time < b.time;
}

}  // namespace

Projection simplex_project(const Library& library, std::span<const double> query,
                           std::optional<std::size_t> query_time, std::size_t p,
                           std::size_t exclusion) {
    const std::size_t E = library.dimension();
    if (query.size() != E) throw DomainError("query dimension does not match library");

    std::vector<Candidate> cand;
    cand.reserve(library.size());
    for (std::size_t i = 0; i < library.size(); ++i) {
        const std::size_t t = library.time(i);
        if (t + p >= library.segment_end()) continue;
        if (query_time) {
            const std::size_t q = *query_time;
            const std::size_t gap = t > q ? t - q : q - t;
            if (gap <= exclusion) continue;
        }
        const auto pt = library.point(i);
        double d2 = 0.0;
        for (std::size_t j = 0; j < E; ++j) {
            const double diff = pt[j] - query[j];
            d2 += diff * diff;
        }
        cand.push_back({std::sqrt(d2), t, i});
    }
    if (cand.size() < E + 2)
        throw DomainError("insufficient eligible neighbours: " + std::to_string(cand.size()) +
                          " for E=" + std::to_string(E));

    const std::size_t k = E + 1;
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end(),
                      closer);

    Projection proj;
    proj.neighbors.reserve(k);
    const double d1 = cand.front().distance;
    const auto data = library.data();
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const auto& c = cand[i];
        double w;
        if (d1 == 0.0)
            w = c.distance == 0.0 ? 1.0 : 0.0;
        else
            w = std::exp(-c.distance / d1);
        proj.neighbors.push_back({c.time, c.distance, w});
        num += w * data[c.time + p];
        den += w;
    }
    // den > 0: the nearest neighbour carries e^-1, or 1 when d1 is zero
    proj.value = num / den;
    return proj;
}

double simplex_predict(const Library& library, std::span<const double> query,
                       std::optional<std::size_t> query_time, std::size_t p,
                       std::size_t exclusion) {
    return simplex_project(library, query, query_time, p, exclusion).value;
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DomainError("pearson inputs differ in length");
    const std::size_t n = x.size();
    if (n < 2) return std::nullopt;
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
    // relative spread below rounding noise counts as zero variance
    const double eps = 1e-24;
    if (sxx <= eps * mx * mx * static_cast<double>(n) ||
        syy <= eps * my * my * static_cast<double>(n))
        return std::nullopt;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double RhoCurve::rho(std::size_t tp) const {
    if (tp < 1 || tp > points.size()) throw DomainError("prediction interval out of range");
    return points[tp - 1].rho;
}

double log_rho_slope(std::span<const RhoPoint> points) {
    std::vector<double> xs, ys;
    for (const auto& pt : points) {
        if (!pt.defined || !(pt.rho > 0.0)) break;
        xs.push_back(static_cast<double>(pt.tp));
        ys.push_back(std::log(pt.rho));
    }
    if (xs.size() < 2) return kNaN;
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    return sxy / sxx;
}

RhoCurve rho_curve(const Series& series, const EmbeddingConfig& config, std::size_t p_max) {
    series.validate();
    config.validate();
    if (p_max < 1) throw DomainError("p_max must be at least 1");

    const std::size_t n = series.values.size();
    const auto plan = detail::plan_for(config.protocol, n);
    auto data = std::make_shared<const std::vector<double>>(series.values);
    const Library library = embed_segment(data, config.E, config.tau, plan.library_begin,
                                          plan.library_end);
    const std::size_t first = detail::first_predictee(plan, config.E, config.tau);

    RhoCurve curve;
    curve.points.reserve(p_max);
    for (std::size_t p = 1; p <= p_max; ++p) {
        std::vector<std::size_t> targets;
        for (std::size_t t = first; t + p < plan.predictee_end; ++t) targets.push_back(t);
        if (targets.size() < kMinPredictions)
            throw DomainError("series too short: " + std::to_string(targets.size()) +
                              " predictions at T_p=" + std::to_string(p));

        std::vector<double> predicted(targets.size());
        std::vector<double> observed(targets.size());
        parallel::for_range(
            targets.size(),
            [&](std::size_t b, std::size_t e) {
                for (std::size_t i = b; i < e; ++i) {
                    const std::size_t t = targets[i];
                    const auto q = delay_vector(*data, t, config.E, config.tau);
                    predicted[i] = simplex_predict(library, q, t, p, config.exclusion);
                    observed[i] = (*data)[t + p];
                }
            },
            64);

        RhoPoint pt{p, kNaN, targets.size(), false};
        if (auto r = pearson(predicted, observed)) {
            pt.rho = *r;
            pt.defined = true;
        }
        curve.points.push_back(pt);
    }
    curve.decay_rate = log_rho_slope(curve.points);
    return curve;
}

GridSearchResult grid_search(const Series& series, std::span<const std::size_t> E_values,
                             std::span<const std::size_t> tau_values,
                             const EmbeddingConfig& tmpl, std::size_t p_eval) {
    if (E_values.empty() || tau_values.empty()) throw DomainError("empty search range");
    if (p_eval < 1) throw DomainError("p_eval must be at least 1");

    std::vector<std::size_t> Es(E_values.begin(), E_values.end());
    std::vector<std::size_t> taus(tau_values.begin(), tau_values.end());
    std::sort(Es.begin(), Es.end());
    std::sort(taus.begin(), taus.end());

    GridSearchResult result;
    bool found = false;
    for (std::size_t E : Es) {
        for (std::size_t tau : taus) {
            EmbeddingConfig cfg = tmpl;
            cfg.E = E;
            cfg.tau = tau;
            GridScore gs{E, tau, kNaN, false};
            try {
                auto curve = rho_curve(series, cfg, p_eval);
                const auto& pt = curve.points.back();
                if (pt.defined) {
                    gs.score = pt.rho;
                    gs.admissible = true;
                }
            } catch (const DomainError&) {
                // series cannot support this pair
            }
            if (gs.admissible && (!found || gs.score > result.score)) {
                result.E = E;
                result.tau = tau;
                result.score = gs.score;
                found = true;
            }
            result.table.push_back(gs);
        }
    }
    if (!found) throw DomainError("no admissible (E, tau) pair");
    return result;
}

std::string_view to_string(Verdict v) noexcept {
    switch (v) {
        case Verdict::ChaosLike: return "chaos-like";
        case Verdict::NoiseLike: return "noise-like";
        case Verdict::PeriodicPlusNoise: return "periodic-plus-noise";
        case Verdict::Inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

Classification classify(const RhoCurve& curve, const RhoCurve* baseline,
                        const ClassifyThresholds& th) {
    if (curve.p_max() < 5) throw DomainError("classification needs p_max >= 5");

    Classification c;
    std::vector<double> defined;
    for (const auto& pt : curve.points)
        if (pt.defined) defined.push_back(pt.rho);
    if (defined.empty()) return c;

    const auto& first = curve.points.front();
    const auto& last = curve.points.back();
    c.rho_first = first.defined ? first.rho : kNaN;
    c.rho_last = last.defined ? last.rho : kNaN;
    auto [lo, hi] = std::minmax_element(defined.begin(), defined.end());
    c.rho_range = *hi - *lo;
    for (double r : defined) c.max_abs_rho = std::max(c.max_abs_rho, std::fabs(r));
    if (baseline && baseline->p_max() >= 1 && baseline->points.front().defined && first.defined)
        c.baseline_margin = first.rho - baseline->points.front().rho;

    if (first.defined && last.defined && first.rho >= th.skill &&
        first.rho - last.rho >= th.decay)
        c.verdict = Verdict::ChaosLike;
    else if (c.max_abs_rho < th.noise)
        c.verdict = Verdict::NoiseLike;
    else if (first.defined && first.rho >= th.skill && c.rho_range < th.flatness)
        c.verdict = Verdict::PeriodicPlusNoise;
    else
        c.verdict = Verdict::Inconclusive;
    return c;
}

}  // namespace chaoslab::forecast
