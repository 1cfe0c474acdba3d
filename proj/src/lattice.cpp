#include "chaoslab/lattice.hpp"

#include <algorithm>
#include <array>
#include <cfloat>
#include <cmath>
#include <string>

#include "chaoslab/error.hpp"
#include "chaoslab/parallel.hpp"
#include "chaoslab/runio.hpp"

namespace chaoslab::lattice {

namespace {

constexpr double kDensityCeiling = 1e300;

constexpr std::array<std::array<int, 2>, 8> kMoore = {{
    {-1, -1}, {-1, 0}, {-1, 1}, {0, -1}, {0, 1}, {1, -1}, {1, 0}, {1, 1},
}};

// Neighbour index or -1 when the offset leaves a non-cyclic grid.
long neighbour(std::size_t n, std::size_t r, std::size_t c, int dr, int dc, bool wrap) {
    const long nn = static_cast<long>(n);
    long rr = static_cast<long>(r) + dr;
    long cc = static_cast<long>(c) + dc;
    if (wrap) {
        rr = (rr % nn + nn) % nn;
        cc = (cc % nn + nn) % nn;
    } else if (rr < 0 || rr >= nn || cc < 0 || cc >= nn) {
        return -1;
    }
    return rr * nn + cc;
}

int in_grid_degree(std::size_t n, std::size_t r, std::size_t c) {
    int deg = 0;
    for (auto [dr, dc] : kMoore)
        if (neighbour(n, r, c, dr, dc, false) >= 0) ++deg;
    return deg;
}

double mean_of(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double variance_of(std::span<const double> v) {
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size());
}

void check_finite(const LatticeState& s) {
    for (std::size_t i = 0; i < s.h.size(); ++i) {
        const double h = s.h[i], p = s.p[i];
        if (!std::isfinite(h) || !std::isfinite(p) || h > kDensityCeiling || p > kDensityCeiling)
            throw NumericError("lattice density diverged at patch " + std::to_string(i), s.t);
    }
}

}  // namespace

void PatchParams::validate() const {
    if (!(r0 > 0.0) || !(attack > 0.0) || !(c > 0.0))
        throw DomainError("R0, attack and c must all be positive");
}

Densities local_update(double h, double p, const PatchParams& params) noexcept {
    const double ap = params.attack * p;
    double escape = std::exp(-ap);
    if (escape < DBL_MIN) escape = 0.0;
    return {params.r0 * h * escape, params.c * h * -std::expm1(-ap)};
}

Densities nb_equilibrium(const PatchParams& params) {
    params.validate();
    if (!(params.r0 > 1.0)) throw DomainError("no positive equilibrium for R0 <= 1");
    const double lnr = std::log(params.r0);
    return {params.r0 * lnr / (params.attack * params.c * (params.r0 - 1.0)), lnr / params.attack};
}

std::string_view to_string(Boundary b) noexcept {
    switch (b) {
        case Boundary::Cyclic: return "cyclic";
        case Boundary::Absorbing: return "absorbing";
        case Boundary::Redistribute: return "redistribute";
    }
    return "cyclic";
}

Boundary parse_boundary(std::string_view text) {
    if (text == "cyclic") return Boundary::Cyclic;
    if (text == "absorbing") return Boundary::Absorbing;
    if (text == "redistribute") return Boundary::Redistribute;
    throw DomainError("unknown boundary '" + std::string(text) + "'");
}

std::vector<double> disperse(std::span<const double> grid, std::size_t n, double mu,
                             Boundary boundary) {
    if (n < 1 || grid.size() != n * n) throw DomainError("grid is not n x n");
    if (!(mu >= 0.0 && mu <= 1.0)) throw DomainError("dispersal fraction must lie in [0, 1]");
    std::vector<double> out(grid.size());
    const bool wrap = boundary == Boundary::Cyclic;

    // gather form: each patch sums what its neighbours send it
    parallel::for_range(
        n,
        [&](std::size_t r0, std::size_t r1) {
            for (std::size_t r = r0; r < r1; ++r) {
                for (std::size_t c = 0; c < n; ++c) {
                    const std::size_t i = r * n + c;
                    double stay = 1.0 - mu;
                    if (boundary == Boundary::Redistribute && in_grid_degree(n, r, c) == 0)
                        stay = 1.0;
                    double incoming = 0.0;
                    for (auto [dr, dc] : kMoore) {
                        const long j = neighbour(n, r, c, dr, dc, wrap);
                        if (j < 0) continue;
                        const auto ju = static_cast<std::size_t>(j);
                        double share = mu / 8.0;
                        if (boundary == Boundary::Redistribute) {
                            // the source splits among its own in-grid neighbours
                            share = mu / in_grid_degree(n, ju / n, ju % n);
                        }
                        incoming += share * grid[ju];
                    }
                    out[i] = stay * grid[i] + incoming;
                }
            }
        },
        64);
    return out;
}

void LatticeConfig::validate() const {
    if (n < 1) throw DomainError("lattice side must be at least 1");
    if (!(mu_h >= 0.0 && mu_h <= 1.0) || !(mu_p >= 0.0 && mu_p <= 1.0))
        throw DomainError("dispersal fractions must lie in [0, 1]");
    if (steps < 1) throw DomainError("lattice run needs at least one generation");
    if (extinction_eps && !(*extinction_eps > 0.0))
        throw DomainError("extinction threshold must be positive");
    if (const auto* r = std::get_if<RandomAroundEquilibrium>(&init)) {
        if (!(r->lo >= 0.0 && r->lo <= r->hi)) throw DomainError("invalid random init range");
    } else if (const auto* s = std::get_if<CentralSeed>(&init)) {
        if (!(s->h0 >= 0.0) || !(s->p0 >= 0.0)) throw DomainError("seed densities must be >= 0");
    } else if (const auto* e = std::get_if<ExplicitState>(&init)) {
        if (e->h.size() != n * n || e->p.size() != n * n)
            throw DomainError("explicit state must be n x n");
        for (std::size_t i = 0; i < n * n; ++i)
            if (!(e->h[i] >= 0.0) || !(e->p[i] >= 0.0) || !std::isfinite(e->h[i]) ||
                !std::isfinite(e->p[i]))
                throw DomainError("explicit densities must be finite and >= 0");
    }
}

LatticeState initial_state(const LatticeConfig& config, const PatchParams& params) {
    config.validate();
    params.validate();
    const std::size_t cells = config.n * config.n;
    LatticeState s{config.n, 0, std::vector<double>(cells, 0.0), std::vector<double>(cells, 0.0)};

    if (const auto* r = std::get_if<RandomAroundEquilibrium>(&config.init)) {
        const Densities eq = nb_equilibrium(params);
        const double span = r->hi - r->lo;
        for (std::size_t i = 0; i < cells; ++i) {
            const std::uint64_t row = i / config.n, col = i % config.n;
            const double uh = runio::rng_value(r->seed, {runio::Stream::LatticeInit, 0, row, col});
            const double up = runio::rng_value(r->seed, {runio::Stream::LatticeInit, 1, row, col});
            s.h[i] = eq.h * (r->lo + span * uh);
            s.p[i] = eq.p * (r->lo + span * up);
        }
    } else if (const auto* c = std::get_if<CentralSeed>(&config.init)) {
        const std::size_t mid = (config.n / 2) * config.n + config.n / 2;
        s.h[mid] = c->h0;
        s.p[mid] = c->p0;
    } else {
        const auto& e = std::get<ExplicitState>(config.init);
        s.h = e.h;
        s.p = e.p;
    }
    return s;
}

LatticeState advance(const LatticeState& state, const LatticeConfig& config,
                     const PatchParams& params) {
    const std::size_t cells = state.h.size();
    std::vector<double> h(cells), p(cells);
    parallel::for_range(
        cells,
        [&](std::size_t b, std::size_t e) {
            for (std::size_t i = b; i < e; ++i) {
                const Densities d = local_update(state.h[i], state.p[i], params);
                h[i] = d.h;
                p[i] = d.p;
            }
        },
        4096);
    LatticeState next;
    next.n = state.n;
    next.t = state.t + 1;
    next.h = disperse(h, state.n, config.mu_h, config.boundary);
    next.p = disperse(p, state.n, config.mu_p, config.boundary);
    return next;
}

RunRecord simulate(const LatticeConfig& config, const PatchParams& params,
                   const RecordOptions& options) {
    LatticeState state = initial_state(config, params);

    RunRecord rec;
    rec.steps_requested = config.steps;
    // the extinction scale needs H*; R0 <= 1 falls back to the initial mean
    if (params.r0 > 1.0) rec.equilibrium = nb_equilibrium(params);
    const double h_scale = params.r0 > 1.0 ? rec.equilibrium.h : std::max(mean_of(state.h), 1.0);
    rec.extinction_eps = config.extinction_eps.value_or(1e-10 * h_scale);

    rec.mean_h.reserve(config.steps + 1);
    rec.mean_p.reserve(config.steps + 1);
    rec.stasis.reserve(config.steps + 1);
    rec.spatial_var_h.reserve(config.steps + 1);

    auto observe = [&](const LatticeState& s, double residual) {
        rec.mean_h.push_back(mean_of(s.h));
        rec.mean_p.push_back(mean_of(s.p));
        rec.stasis.push_back(residual);
        rec.spatial_var_h.push_back(variance_of(s.h));
        if (options.frames_every > 0 && s.t % options.frames_every == 0) rec.frames.push_back(s);
    };

    check_finite(state);
    observe(state, 0.0);
    if (rec.mean_h.back() < rec.extinction_eps) rec.extinct = true;

    while (!rec.extinct && state.t < config.steps) {
        LatticeState next = advance(state, config, params);
        check_finite(next);
        double residual = 0.0;
        for (std::size_t i = 0; i < next.h.size(); ++i)
            residual = std::max({residual, std::fabs(next.h[i] - state.h[i]),
                                 std::fabs(next.p[i] - state.p[i])});
        state = std::move(next);
        observe(state, residual);
        if (rec.mean_h.back() < rec.extinction_eps) rec.extinct = true;
    }
    rec.final_state = std::move(state);
    return rec;
}

std::string_view to_string(Regime r) noexcept {
    switch (r) {
        case Regime::Extinct: return "extinct";
        case Regime::StaticHeterogeneous: return "static-heterogeneous";
        case Regime::PersistentOscillatory: return "persistent-oscillatory";
    }
    return "persistent-oscillatory";
}

std::size_t dominant_period(std::span<const double> series) {
    const std::size_t n = series.size();
    if (n < 4) return 0;
    const double m = mean_of(series);
    double var = 0.0;
    for (double x : series) var += (x - m) * (x - m);
    if (!(var > 0.0)) return 0;
    const std::size_t max_lag = n / 2;
    std::vector<double> acf(max_lag + 1, 0.0);
    for (std::size_t lag = 0; lag <= max_lag; ++lag) {
        double s = 0.0;
        for (std::size_t t = 0; t + lag < n; ++t) s += (series[t] - m) * (series[t + lag] - m);
        acf[lag] = s / var;
    }
    for (std::size_t lag = 1; lag + 1 <= max_lag; ++lag)
        if (acf[lag] > 0.0 && acf[lag] >= acf[lag - 1] && acf[lag] > acf[lag + 1]) return lag;
    return 0;
}

RegimeReport classify_regime(const RunRecord& record, const RegimeThresholds& th) {
    if (record.mean_h.empty()) throw DomainError("empty run record");
    RegimeReport rep;
    rep.generations = record.mean_h.size() - 1;
    rep.spatial_variance = record.spatial_var_h.back();

    const std::size_t start =
        static_cast<std::size_t>(th.transient_fraction * static_cast<double>(rep.generations));
    rep.post_transient = rep.generations - start;
    std::span<const double> tail(record.mean_h.data() + start, record.mean_h.size() - start);
    rep.temporal_variance = variance_of(tail);
    auto [lo, hi] = std::minmax_element(tail.begin(), tail.end());
    rep.min_mean_h = *lo;
    rep.max_mean_h = *hi;
    rep.stasis_residual = 0.0;
    for (std::size_t t = std::max<std::size_t>(start, 1); t < record.stasis.size(); ++t)
        rep.stasis_residual = std::max(rep.stasis_residual, record.stasis[t]);

    if (record.extinct || record.mean_h.back() < record.extinction_eps) {
        rep.label = Regime::Extinct;
        return rep;
    }
    if (rep.post_transient < th.min_post_transient)
        throw DomainError("run too short: " + std::to_string(rep.post_transient) +
                          " post-transient generations, need " +
                          std::to_string(th.min_post_transient));
    rep.dominant_period = dominant_period(tail);
    if (rep.stasis_residual < th.stasis_tolerance &&
        rep.spatial_variance > th.homogeneity_tolerance)
        rep.label = Regime::StaticHeterogeneous;
    else
        rep.label = Regime::PersistentOscillatory;
    return rep;
}

runio::Frame render_frame(const LatticeState& state, const Densities& equilibrium) {
    runio::LatticePalette palette;
    palette.h_star = equilibrium.h;
    palette.p_star = equilibrium.p;
    return runio::render_lattice(state.h, state.p, static_cast<int>(state.n), palette);
}

}  // namespace chaoslab::lattice
