#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "chaoslab/error.hpp"
#include "chaoslab/lattice.hpp"
#include "chaoslab/parallel.hpp"
#include "doctest.h"

using namespace chaoslab;
using namespace chaoslab::lattice;

namespace {

double total(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

std::vector<double> ramp_grid(std::size_t n) {
    std::vector<double> g(n * n);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = 1.0 + 0.37 * static_cast<double>(i % 7) + 0.01 * static_cast<double>(i);
    return g;
}

// cyclic translation by (dr, dc)
std::vector<double> shift(const std::vector<double>& g, std::size_t n, std::size_t dr, std::size_t dc) {
    std::vector<double> out(g.size());
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) out[((r + dr) % n) * n + (c + dc) % n] = g[r * n + c];
    return out;
}

LatticeConfig explicit_config(std::size_t n, std::vector<double> h, std::vector<double> p,
                              std::size_t steps) {
    LatticeConfig cfg;
    cfg.n = n;
    cfg.steps = steps;
    cfg.init = ExplicitState{std::move(h), std::move(p)};
    return cfg;
}

}  // namespace

TEST_CASE("local update") {
    PatchParams pp{2.0, 1.5, 0.7};
    auto d = local_update(3.0, 0.4, pp);
    CHECK(d.h == doctest::Approx(2.0 * 3.0 * std::exp(-0.6)));
    CHECK(d.p == doctest::Approx(0.7 * 3.0 * (1.0 - std::exp(-0.6))));
    // escape fractions below the smallest normal double are flushed
    auto z = local_update(1.0, 800.0, {2.0, 1.0, 1.0});
    CHECK(z.h == 0.0);
    CHECK(z.p == 1.0);
}

TEST_CASE("equilibrium is a fixed point of the local map") {
    for (PatchParams pp : {PatchParams{2.0, 1.0, 1.0}, PatchParams{3.0, 0.5, 2.0}, PatchParams{1.2, 2.0, 0.3}}) {
        auto eq = nb_equilibrium(pp);
        // oracle: P* = ln R0 / a and H* = R0 ln R0 / (a c (R0 - 1))
        CHECK(eq.p == doctest::Approx(std::log(pp.r0) / pp.attack));
        auto d = local_update(eq.h, eq.p, pp);
        CHECK(d.h == doctest::Approx(eq.h).epsilon(1e-12));
        CHECK(d.p == doctest::Approx(eq.p).epsilon(1e-12));
    }
    CHECK(nb_equilibrium({2.0, 1.0, 1.0}).h == doctest::Approx(2.0 * std::numbers::ln2));
    CHECK_THROWS_AS(nb_equilibrium({1.0, 1.0, 1.0}), DomainError);
    CHECK_THROWS_AS(nb_equilibrium({2.0, 0.0, 1.0}), DomainError);
}

TEST_CASE("boundary names round-trip") {
    for (auto b : {Boundary::Cyclic, Boundary::Absorbing, Boundary::Redistribute})
        CHECK(parse_boundary(to_string(b)) == b);
    CHECK_THROWS_AS(parse_boundary("mirror"), DomainError);
}

TEST_CASE("dispersal of a point mass") {
    const std::size_t n = 5;
    std::vector<double> g(n * n, 0.0);
    g[2 * n + 2] = 8.0;
    auto out = disperse(g, n, 0.5, Boundary::Cyclic);
    CHECK(out[2 * n + 2] == doctest::Approx(4.0));
    CHECK(out[1 * n + 1] == doctest::Approx(0.5));
    CHECK(out[3 * n + 2] == doctest::Approx(0.5));
    CHECK(out[0] == 0.0);
    CHECK(disperse(g, n, 0.0, Boundary::Absorbing) == g);
    CHECK_THROWS_AS(disperse(g, n, 1.5, Boundary::Cyclic), DomainError);
    CHECK_THROWS_AS(disperse(g, 4, 0.5, Boundary::Cyclic), DomainError);
}

TEST_CASE("dispersal conserves mass unless edges absorb it") {
    for (std::size_t n : {1u, 2u, 3u, 8u}) {
        auto g = ramp_grid(n);
        for (double mu : {0.0, 0.3, 1.0}) {
            CHECK(total(disperse(g, n, mu, Boundary::Cyclic)) == doctest::Approx(total(g)).epsilon(1e-13));
            CHECK(total(disperse(g, n, mu, Boundary::Redistribute)) == doctest::Approx(total(g)).epsilon(1e-13));
        }
    }
    // a corner patch loses 5 of its 8 shares off-grid
    const std::size_t n = 6;
    std::vector<double> g(n * n, 0.0);
    g[0] = 1.0;
    CHECK(total(disperse(g, n, 0.8, Boundary::Absorbing)) == doctest::Approx(1.0 - 0.8 * 5.0 / 8.0));
    // redistribute splits among the 3 in-grid neighbours instead
    auto red = disperse(g, n, 0.8, Boundary::Redistribute);
    CHECK(red[1] == doctest::Approx(0.8 / 3.0));
    // interior mass is unaffected by the edge rule
    std::vector<double> mid(n * n, 0.0);
    mid[2 * n + 3] = 1.0;
    CHECK(disperse(mid, n, 0.8, Boundary::Absorbing) == disperse(mid, n, 0.8, Boundary::Cyclic));
}

TEST_CASE("cyclic dispersal commutes with translation") {
    const std::size_t n = 7;
    auto g = ramp_grid(n);
    auto a = shift(disperse(g, n, 0.4, Boundary::Cyclic), n, 2, 5);
    auto b = disperse(shift(g, n, 2, 5), n, 0.4, Boundary::Cyclic);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-15));
}

TEST_CASE("initial states") {
    PatchParams pp;
    const auto eq = nb_equilibrium(pp);
    LatticeConfig cfg;
    cfg.n = 12;
    cfg.init = RandomAroundEquilibrium{0.5, 1.5, 9};
    auto s = initial_state(cfg, pp);
    for (std::size_t i = 0; i < s.h.size(); ++i) {
        CHECK(s.h[i] >= 0.5 * eq.h);
        CHECK(s.h[i] <= 1.5 * eq.h);
        CHECK(s.p[i] >= 0.5 * eq.p);
        CHECK(s.p[i] <= 1.5 * eq.p);
    }
    CHECK(s.h[0] != s.h[1]);
    CHECK(initial_state(cfg, pp).h == s.h);
    cfg.init = RandomAroundEquilibrium{0.5, 1.5, 10};
    CHECK(initial_state(cfg, pp).h != s.h);

    cfg.init = CentralSeed{3.0, 0.5};
    auto c = initial_state(cfg, pp);
    CHECK(c.h[6 * 12 + 6] == 3.0);
    CHECK(total(c.h) == 3.0);

    cfg.init = ExplicitState{std::vector<double>(4, 1.0), std::vector<double>(4, 1.0)};
    CHECK_THROWS_AS(initial_state(cfg, pp), DomainError);
    cfg.n = 0;
    CHECK_THROWS_AS(cfg.validate(), DomainError);
}

TEST_CASE("a single patch diverges to extinction") {
    PatchParams pp;
    const auto eq = nb_equilibrium(pp);
    auto cfg = explicit_config(1, {eq.h * 1.01}, {eq.p}, 1000);
    auto rec = simulate(cfg, pp);
    CHECK(rec.extinct);
    CHECK(rec.mean_h.size() < 1001);
    CHECK(rec.mean_h.back() < rec.extinction_eps);
    CHECK(rec.extinction_eps == doctest::Approx(1e-10 * eq.h));
    auto rep = classify_regime(rec);
    CHECK(rep.label == Regime::Extinct);
}

TEST_CASE("run record bookkeeping") {
    PatchParams pp;
    LatticeConfig cfg;
    cfg.n = 8;
    cfg.steps = 30;
    auto rec = simulate(cfg, pp, {10});
    REQUIRE(rec.mean_h.size() == 31);
    CHECK(rec.stasis[0] == 0.0);
    CHECK(rec.steps_requested == 30);
    REQUIRE(rec.frames.size() == 4);
    CHECK(rec.frames[3].t == 30);
    CHECK(rec.final_state.t == 30);
    CHECK(rec.final_state.h == rec.frames[3].h);
    // the step-by-step path matches
    auto s = initial_state(cfg, pp);
    for (int i = 0; i < 30; ++i) s = advance(s, cfg, pp);
    CHECK(s.h == rec.final_state.h);
    CHECK(total(s.h) / 64.0 == doctest::Approx(rec.mean_h.back()));
}

TEST_CASE("overflow is reported with its generation") {
    PatchParams pp{1e7, 1.0, 1.0};
    auto cfg = explicit_config(2, std::vector<double>(4, 1.0), std::vector<double>(4, 0.0), 100);
    try {
        simulate(cfg, pp);
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        CHECK(e.step() == 43);  // 1e7^43 is the first power above 1e300
    }
}

TEST_CASE("conjugacy: (attack, c) rescales to (1, 1)") {
    // H' = a c H and P' = a P turn the (a, c) system into the unit one
    const std::size_t n = 10;
    const double a = 2.0, c = 3.0;
    std::vector<double> h(n * n), p(n * n);
    for (std::size_t i = 0; i < n * n; ++i) {
        h[i] = 0.2 + 0.01 * static_cast<double>((i * 37) % 23);
        p[i] = 0.1 + 0.02 * static_cast<double>((i * 11) % 17);
    }
    std::vector<double> hs(h), ps(p);
    for (auto& v : hs) v *= a * c;
    for (auto& v : ps) v *= a;
    auto ra = simulate(explicit_config(n, h, p, 200), {2.0, a, c});
    auto rb = simulate(explicit_config(n, hs, ps, 200), {2.0, 1.0, 1.0});
    REQUIRE(ra.mean_h.size() == rb.mean_h.size());
    for (std::size_t i = 0; i < n * n; ++i) {
        CHECK(a * c * ra.final_state.h[i] == doctest::Approx(rb.final_state.h[i]).epsilon(1e-9));
        CHECK(a * ra.final_state.p[i] == doctest::Approx(rb.final_state.p[i]).epsilon(1e-9));
    }
}

TEST_CASE("cyclic dynamics commute with translation") {
    PatchParams pp;
    const std::size_t n = 9;
    std::vector<double> h = ramp_grid(n), p = ramp_grid(n);
    for (auto& v : p) v *= 0.4;
    auto ra = simulate(explicit_config(n, h, p, 25), pp);
    auto rb = simulate(explicit_config(n, shift(h, n, 4, 1), shift(p, n, 4, 1), 25), pp);
    auto sh = shift(ra.final_state.h, n, 4, 1);
    for (std::size_t i = 0; i < sh.size(); ++i) CHECK(sh[i] == doctest::Approx(rb.final_state.h[i]).epsilon(1e-12));
}

TEST_CASE("simulation does not depend on the thread count") {
    PatchParams pp;
    LatticeConfig cfg;
    cfg.n = 70;  // large enough to take the parallel path
    cfg.steps = 40;
    parallel::set_thread_override(1);
    auto a = simulate(cfg, pp);
    parallel::set_thread_override(4);
    auto b = simulate(cfg, pp);
    parallel::set_thread_override(0);
    CHECK(a.final_state.h == b.final_state.h);
    CHECK(a.final_state.p == b.final_state.p);
    CHECK(a.mean_h == b.mean_h);
}

TEST_CASE("regime classification") {
    PatchParams pp;
    LatticeConfig cfg;
    cfg.n = 30;
    cfg.mu_h = 0.05;
    cfg.mu_p = 1.0;
    cfg.steps = 5000;
    auto rep = classify_regime(simulate(cfg, pp));
    CHECK(rep.label == Regime::StaticHeterogeneous);
    CHECK(rep.stasis_residual < 1e-8);
    CHECK(rep.spatial_variance > 0.0);
    CHECK(rep.post_transient == 2500);

    cfg.steps = 600;
    CHECK_THROWS_AS(classify_regime(simulate(cfg, pp)), DomainError);
    CHECK(to_string(Regime::PersistentOscillatory) == "persistent-oscillatory");
}

TEST_CASE("dominant period of a periodic series") {
    std::vector<double> s(400);
    for (std::size_t t = 0; t < s.size(); ++t) s[t] = std::sin(2 * std::numbers::pi * static_cast<double>(t) / 25.0);
    CHECK(dominant_period(s) == 25);
    std::vector<double> flat(100, 1.0);
    CHECK(dominant_period(flat) == 0);
}

TEST_CASE("equilibrium frames sit at the ramp midpoint") {
    PatchParams pp;
    const auto eq = nb_equilibrium(pp);
    LatticeState s{2, 0, std::vector<double>(4, eq.h), std::vector<double>(4, eq.p)};
    s.p[3] = 0.0;
    auto f = render_frame(s, eq);
    CHECK(f.pixels == std::vector<std::uint8_t>{224, 224, 224, 120});
}
