#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

#include "chaoslab/error.hpp"
#include "chaoslab/forecasting.hpp"
#include "chaoslab/parallel.hpp"
#include "doctest.h"

using namespace chaoslab;
using namespace chaoslab::forecast;

namespace {

std::shared_ptr<const std::vector<double>> share(std::vector<double> v) {
    return std::make_shared<const std::vector<double>>(std::move(v));
}

Series logistic_series(std::size_t n = 1000) {
    return map_series(maps::MapSpec::logistic(4.0), n);
}

RhoCurve synthetic_curve(std::vector<double> rhos) {
    RhoCurve c;
    for (std::size_t i = 0; i < rhos.size(); ++i)
        c.points.push_back({i + 1, rhos[i], 100, !std::isnan(rhos[i])});
    c.decay_rate = log_rho_slope(c.points);
    return c;
}

}  // namespace

TEST_CASE("protocol names round-trip") {
    for (auto p : {Protocol::HalfSplitForward, Protocol::HalfSplitBackward, Protocol::FullWithExclusion})
        CHECK(parse_protocol(to_string(p)) == p);
    CHECK(to_string(Protocol::HalfSplitForward) == "half-split-forward");
    CHECK_THROWS_AS(parse_protocol("sideways"), DomainError);
}

TEST_CASE("series validation") {
    CHECK_THROWS_AS((Series{{1.0}, ""}).validate(), DomainError);
    CHECK_THROWS_AS((Series{{1.0, std::nan("")}, ""}).validate(), DomainError);
    CHECK_THROWS_AS((EmbeddingConfig{0, 1, 0, {}}).validate(), DomainError);
    CHECK_THROWS_AS((EmbeddingConfig{2, 0, 0, {}}).validate(), DomainError);
}

TEST_CASE("delay vectors and embedding") {
    std::vector<double> x{0, 1, 2, 3, 4, 5, 6, 7};
    CHECK(delay_vector(x, 5, 3, 2) == std::vector<double>{5, 3, 1});
    CHECK_THROWS_AS(delay_vector(x, 3, 3, 2), DomainError);
    auto lib = embed(Series{x, ""}, 3, 2);
    CHECK(lib.size() == 8 - 4);
    CHECK(lib.time(0) == 4);
    CHECK(std::vector<double>(lib.point(1).begin(), lib.point(1).end()) == std::vector<double>{5, 3, 1});

    // a segment never reaches outside itself
    auto seg = embed_segment(share(x), 2, 1, 4, 8);
    CHECK(seg.size() == 3);
    CHECK(seg.time(0) == 5);
    CHECK_THROWS_AS(embed_segment(share(x), 4, 2, 4, 8), DomainError);
}

TEST_CASE("simplex weights, order and ties") {
    // library values are continuations of themselves shifted by 10
    std::vector<double> x{0.0, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 1.5, 3.0};
    auto lib = embed_segment(share(x), 1, 1, 0, 10);
    std::vector<double> q{1.5};
    auto proj = simplex_project(lib, q, std::nullopt, 1, 0);
    REQUIRE(proj.neighbors.size() == 2);
    CHECK(proj.neighbors[0].time == 8);
    CHECK(proj.neighbors[0].distance == 0.0);
    CHECK(proj.neighbors[0].weight == 1.0);
    CHECK(proj.neighbors[1].weight == 0.0);
    CHECK(proj.value == 3.0);

    // ties at equal distance go to the earlier time
    std::vector<double> y{0.0, 2.0, 1.0, 0.0, 2.0, 5.0, 7.0, 9.0, 11.0};
    auto lib2 = embed_segment(share(y), 1, 1, 0, 9);
    auto p2 = simplex_project(lib2, std::vector<double>{1.0}, std::nullopt, 1, 0);
    // |0-1| = |2-1| = 1 for t = 0, 1, 3, 4 and 0 for t = 2
    REQUIRE(p2.neighbors.size() == 2);
    CHECK(p2.neighbors[0].time == 2);
    CHECK(p2.neighbors[1].time == 0);

    // exclusion removes the predictee's own neighbourhood
    auto p3 = simplex_project(lib2, std::vector<double>{1.0}, 2, 1, 2);
    for (const auto& nb : p3.neighbors) CHECK((nb.time > 4));
}

TEST_CASE("simplex weights are exp(-d/d1)") {
    std::vector<double> x{0.0, 10.0, 3.0, 20.0, 7.0, 30.0, 100.0, 200.0};
    auto lib = embed_segment(share(x), 1, 1, 0, 8);
    auto proj = simplex_project(lib, std::vector<double>{1.0}, std::nullopt, 1, 0);
    // nearest: t=0 (d=1), t=2 (d=2)
    REQUIRE(proj.neighbors.size() == 2);
    CHECK(proj.neighbors[0].time == 0);
    CHECK(proj.neighbors[1].time == 2);
    const double w0 = std::exp(-1.0), w1 = std::exp(-2.0);
    CHECK(proj.neighbors[0].weight == doctest::Approx(w0));
    CHECK(proj.neighbors[1].weight == doctest::Approx(w1));
    CHECK(proj.value == doctest::Approx((w0 * 10.0 + w1 * 20.0) / (w0 + w1)));
}

TEST_CASE("simplex needs E+2 eligible points") {
    std::vector<double> x{0, 1, 2, 3};
    auto lib = embed_segment(share(x), 2, 1, 0, 4);
    CHECK_THROWS_AS(simplex_project(lib, std::vector<double>{1, 0}, std::nullopt, 1, 0), DomainError);
    CHECK_THROWS_AS(simplex_project(lib, std::vector<double>{1}, std::nullopt, 1, 0), DomainError);
}

TEST_CASE("simplex is equivariant under positive affine maps") {
    auto s = logistic_series(400);
    auto lib = embed(s, 3, 1);
    std::vector<double> t = s.values;
    for (auto& v : t) v = 2.5 * v - 7.0;
    auto lib_t = embed(Series{t, ""}, 3, 1);
    for (std::size_t q : {250u, 300u, 333u}) {
        auto a = simplex_predict(lib, delay_vector(s.values, q, 3, 1), q, 2, 0);
        auto b = simplex_predict(lib_t, delay_vector(t, q, 3, 1), q, 2, 0);
        CHECK(b == doctest::Approx(2.5 * a - 7.0).epsilon(1e-9));
    }
}

TEST_CASE("pearson against the textbook formula") {
    std::vector<double> x{1, 2, 3, 4, 5}, y{2, 4, 5, 4, 5};
    // sum dx dy = 6, sum dx^2 = 10, sum dy^2 = 6
    CHECK(*pearson(x, y) == doctest::Approx(6.0 / std::sqrt(60.0)));
    CHECK(*pearson(y, x) == doctest::Approx(*pearson(x, y)));
    CHECK_FALSE(pearson(x, std::vector<double>(5, 3.0)).has_value());
    CHECK_FALSE(pearson(std::vector<double>{1}, std::vector<double>{2}).has_value());
    CHECK_THROWS_AS(pearson(x, std::vector<double>{1, 2}), DomainError);
}

TEST_CASE("pearson invariances") {
    std::vector<double> x{0.3, -1.2, 4.4, 2.0, 0.0, 9.1, -3.3};
    std::vector<double> y{1.0, 0.5, 3.9, 1.5, 0.2, 7.7, -2.0};
    const double r = *pearson(x, y);
    // joint permutation
    std::vector<std::size_t> perm{6, 2, 0, 5, 1, 4, 3};
    std::vector<double> px, py;
    for (auto i : perm) {
        px.push_back(x[i]);
        py.push_back(y[i]);
    }
    CHECK(*pearson(px, py) == doctest::Approx(r));
    // affine maps on either side
    std::vector<double> ax = x, ay = y;
    for (auto& v : ax) v = 3.0 * v + 1.0;
    for (auto& v : ay) v = -0.5 * v + 8.0;
    CHECK(*pearson(ax, y) == doctest::Approx(r));
    CHECK(*pearson(x, ay) == doctest::Approx(-r));
    CHECK(std::fabs(r) <= 1.0);
}

TEST_CASE("rho curve prediction counts follow the protocol") {
    auto s = logistic_series(1000);
    EmbeddingConfig cfg;
    auto fwd = rho_curve(s, cfg, 3);
    CHECK(fwd.points[0].n == 499);
    CHECK(fwd.points[2].n == 497);
    cfg.protocol = Protocol::HalfSplitBackward;
    CHECK(rho_curve(s, cfg, 1).points[0].n == 497);
    cfg.protocol = Protocol::FullWithExclusion;
    cfg.exclusion = 5;
    CHECK(rho_curve(s, cfg, 1).points[0].n == 997);
}

TEST_CASE("logistic forecasts decay with interval") {
    auto curve = rho_curve(logistic_series(1000), {}, 10);
    REQUIRE(curve.p_max() == 10);
    CHECK(curve.rho(1) >= 0.85);
    CHECK(curve.rho(1) - curve.rho(10) >= 0.3);
    CHECK(curve.decay_rate < 0.0);
    CHECK_THROWS_AS(curve.rho(0), DomainError);
    CHECK_THROWS_AS(curve.rho(11), DomainError);
}

TEST_CASE("noise has no skill and sine has full skill") {
    auto noise = rho_curve(uniform_noise(1000, 7), {}, 10);
    for (const auto& p : noise.points) CHECK(std::fabs(p.rho) < 0.15);
    auto sine = rho_curve(sine_series(1000, 20.0), {}, 10);
    for (const auto& p : sine.points) CHECK(p.rho > 0.95);
}

TEST_CASE("exclusion window is honoured exhaustively") {
    auto s = uniform_noise(60, 3);
    auto lib = embed(s, 2, 1);
    for (std::size_t excl : {0u, 1u, 4u}) {
        for (std::size_t q = 1; q < 50; ++q) {
            auto proj = simplex_project(lib, delay_vector(s.values, q, 2, 1), q, 1, excl);
            for (const auto& nb : proj.neighbors) {
                const std::size_t gap = nb.time > q ? nb.time - q : q - nb.time;
                CHECK(gap > excl);
            }
        }
    }
    // without a query time the exact match wins outright
    auto proj = simplex_project(lib, delay_vector(s.values, 10, 2, 1), std::nullopt, 1, 0);
    CHECK(proj.neighbors[0].time == 10);
    CHECK(proj.value == s.values[11]);
}

TEST_CASE("short series are rejected") {
    CHECK_THROWS_AS(rho_curve(logistic_series(20), {}, 5), DomainError);
}

TEST_CASE("rho curves do not depend on the thread count") {
    auto s = logistic_series(2000);
    parallel::set_thread_override(1);
    auto a = rho_curve(s, {}, 5);
    parallel::set_thread_override(3);
    auto b = rho_curve(s, {}, 5);
    parallel::set_thread_override(0);
    for (std::size_t i = 0; i < 5; ++i) CHECK(a.points[i].rho == b.points[i].rho);
}

TEST_CASE("log-rho slope") {
    auto c = synthetic_curve({std::exp(-0.3), std::exp(-0.6), std::exp(-0.9), -0.1, 0.5});
    CHECK(c.decay_rate == doctest::Approx(-0.3));
    CHECK(std::isnan(synthetic_curve({-0.2, 0.5, 0.5, 0.5, 0.5}).decay_rate));
}

TEST_CASE("grid search picks the best score with ties to small E then tau") {
    auto s = logistic_series(1000);
    std::vector<std::size_t> Es{3, 1, 2}, taus{2, 1};
    auto res = grid_search(s, Es, taus, {}, 1);
    REQUIRE(res.table.size() == 6);
    CHECK(res.table[0].E == 1);
    CHECK(res.table[0].tau == 1);
    double best = -2.0;
    for (const auto& g : res.table)
        if (g.admissible) best = std::max(best, g.score);
    CHECK(res.score == best);
    for (const auto& g : res.table) {
        if (g.admissible && g.score == best) {
            CHECK(g.E == res.E);
            CHECK(g.tau == res.tau);
            break;
        }
    }
    CHECK(res.E == 1);  // the map is one-dimensional

    // sine: many pairs tie at rho = 1
    auto sine = sine_series(600, 20.0);
    std::vector<std::size_t> E2{2, 3, 4}, t2{1, 2};
    auto r2 = grid_search(sine, E2, t2, {}, 1);
    CHECK(r2.E == 2);
    CHECK(r2.tau == 1);
}

TEST_CASE("grid search records inadmissible pairs") {
    auto s = logistic_series(60);
    std::vector<std::size_t> Es{1, 20}, taus{1};
    auto res = grid_search(s, Es, taus, {}, 1);
    CHECK(res.table[1].admissible == false);
    CHECK(std::isnan(res.table[1].score));
    std::vector<std::size_t> none;
    CHECK_THROWS_AS(grid_search(s, none, taus, {}, 1), DomainError);
}

TEST_CASE("AR fit recovers a linear recurrence") {
    std::vector<double> x{0.1, 0.4};
    for (int i = 0; i < 200; ++i) x.push_back(0.5 + 0.6 * x[x.size() - 1] - 0.3 * x[x.size() - 2]);
    // perturb so the normal equations are well conditioned
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += 1e-3 * std::sin(1.7 * static_cast<double>(i * i));
    auto m = fit_ar(x, 2);
    CHECK_FALSE(m.ridge);
    CHECK(m.coefficients[0] == doctest::Approx(0.6).epsilon(0.05));
    CHECK(m.coefficients[1] == doctest::Approx(-0.3).epsilon(0.05));
}

TEST_CASE("AR fit on a constant series falls back to ridge") {
    auto m = fit_ar(std::vector<double>(50, 2.0), 2);
    CHECK(m.ridge);
    for (double c : m.coefficients) CHECK(std::isfinite(c));
    CHECK_THROWS_AS(fit_ar(std::vector<double>{1, 2}, 1), DomainError);
}

TEST_CASE("AR baseline") {
    auto sine = ar_rho_curve(sine_series(1000, 20.0), 2, Protocol::HalfSplitForward, 10);
    for (const auto& p : sine.points) CHECK(p.rho > 0.95);
    // a linear predictor cannot follow the logistic map
    auto lg = ar_rho_curve(logistic_series(1000), 3, Protocol::HalfSplitForward, 1);
    CHECK(std::fabs(lg.rho(1)) < 0.2);
    CHECK_THROWS_AS(ar_rho_curve(logistic_series(25), 3, Protocol::HalfSplitForward, 1), DomainError);
}

TEST_CASE("simplex matches AR on a linear process") {
    auto s = ar1_series(1000, 0.9, 1.0, 3);
    auto simplex = rho_curve(s, {}, 1);
    auto ar = ar_rho_curve(s, 1, Protocol::HalfSplitForward, 1);
    CHECK(std::fabs(simplex.rho(1) - ar.rho(1)) < 0.05);
    CHECK(ar.rho(1) == doctest::Approx(0.9).epsilon(0.06));
}

TEST_CASE("classifier on synthetic curves") {
    CHECK(classify(synthetic_curve({0.95, 0.8, 0.6, 0.4, 0.2})).verdict == Verdict::ChaosLike);
    CHECK(classify(synthetic_curve({0.05, -0.1, 0.12, 0.0, 0.03})).verdict == Verdict::NoiseLike);
    CHECK(classify(synthetic_curve({0.9, 0.92, 0.88, 0.9, 0.91})).verdict == Verdict::PeriodicPlusNoise);
    CHECK(classify(synthetic_curve({0.6, 0.5, 0.45, 0.42, 0.4})).verdict == Verdict::Inconclusive);
    CHECK(classify(synthetic_curve({NAN, NAN, NAN, NAN, NAN})).verdict == Verdict::Inconclusive);
    CHECK_THROWS_AS(classify(synthetic_curve({0.9, 0.8})), DomainError);

    auto base = synthetic_curve({0.7, 0.6, 0.5, 0.4, 0.3});
    auto c = classify(synthetic_curve({0.95, 0.8, 0.6, 0.4, 0.2}), &base);
    REQUIRE(c.baseline_margin.has_value());
    CHECK(*c.baseline_margin == doctest::Approx(0.25));
    CHECK(c.rho_range == doctest::Approx(0.75));
    CHECK(c.max_abs_rho == doctest::Approx(0.95));
    CHECK(to_string(Verdict::PeriodicPlusNoise) == "periodic-plus-noise");
}

TEST_CASE("classifier on the synthetic triptych") {
    CHECK(classify(rho_curve(logistic_series(1000), {}, 10)).verdict == Verdict::ChaosLike);
    CHECK(classify(rho_curve(uniform_noise(1000, 1), {}, 10)).verdict == Verdict::NoiseLike);
    CHECK(classify(rho_curve(sine_series(1000, 20.0), {}, 10)).verdict == Verdict::PeriodicPlusNoise);
}

TEST_CASE("sources are deterministic and seeded") {
    CHECK(uniform_noise(50, 4).values == uniform_noise(50, 4).values);
    CHECK(uniform_noise(50, 4).values != uniform_noise(50, 5).values);
    CHECK(ar1_series(50, 0.5, 1.0, 2).values == ar1_series(50, 0.5, 1.0, 2).values);
    CHECK_THROWS_AS(ar1_series(10, 1.0, 1.0, 1), DomainError);
    auto sine = sine_series(40, 20.0, 2.0);
    CHECK(sine.values[5] == doctest::Approx(2.0));
    CHECK(sine.values[10] == doctest::Approx(0.0));
    CHECK_THROWS_AS(sine_series(10, 0.0), DomainError);
}

TEST_CASE("aggregates are sums of seeded component orbits") {
    auto comps = independent_logistic(3, 4.0, 10);
    REQUIRE(comps.size() == 3);
    CHECK(comps[2].seed == 12);
    auto agg = aggregate_series(comps, 100);
    std::vector<double> expect(100, 0.0);
    for (const auto& c : comps) {
        const double x0 = component_initial_state(c);
        CHECK(x0 > 0.05);
        CHECK(x0 < 0.95);
        auto o = maps::iterate(c.map, x0, 100);
        for (std::size_t i = 0; i < 100; ++i) expect[i] += o.samples[i];
    }
    CHECK(agg.values == expect);
    std::vector<std::vector<double>> bad{{1, 2}, {1}};
    CHECK_THROWS_AS(sum_series(bad), DomainError);
    CHECK_THROWS_AS(independent_logistic(0, 4.0, 1), DomainError);
}

TEST_CASE("aggregation experiment averages replicates") {
    AggregationSettings st;
    st.length = 1500;
    st.replicates = 3;
    std::vector<std::size_t> ks{1, 20};
    auto pts = aggregation_experiment(ks, st);
    REQUIRE(pts.size() == 2);
    for (const auto& p : pts) {
        REQUIRE(p.replicate_rho.size() == 3);
        double m = std::accumulate(p.replicate_rho.begin(), p.replicate_rho.end(), 0.0) / 3.0;
        CHECK(p.mean_rho == doctest::Approx(m));
    }
    CHECK(pts[0].mean_rho > 0.95);
    CHECK(pts[1].mean_rho < pts[0].mean_rho);
    // replicates differ from one another
    CHECK(pts[1].replicate_rho[0] != pts[1].replicate_rho[1]);
    st.replicates = 0;
    CHECK_THROWS_AS(aggregation_experiment(ks, st), DomainError);
}
