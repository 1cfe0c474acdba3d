#include "chaoslab/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <vector>

#include "CLI11.hpp"
#include "chaoslab/error.hpp"
#include "chaoslab/forecasting.hpp"
#include "chaoslab/games.hpp"
#include "chaoslab/lattice.hpp"
#include "chaoslab/maps.hpp"
#include "chaoslab/runio.hpp"

namespace chaoslab::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using runio::CsvTable;
using runio::format_double;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Common {
    std::string out;
    std::uint64_t seed = 1;
    std::string format = "csv";
    std::size_t frames_every = 0;
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--out", c.out, "Directory for report.json, tables and frames");
    app->add_option("--seed", c.seed, "Seed for every random stream")->capture_default_str();
    app->add_option("--format", c.format, "Table format: csv files or tables inside the JSON report")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
    app->add_option("--frames-every", c.frames_every, "Write a frame every K generations (0 = none)")
        ->capture_default_str();
}

json table_json(const CsvTable& t) {
    json rows = json::array();
    for (const auto& r : t.rows) rows.push_back(r);
    return {{"columns", t.columns}, {"rows", rows}};
}

// Collects one command's results and writes them out at the end.
class Run {
public:
    Run(std::string command, const Common& common, json config, std::vector<std::string> argv)
        : command_(std::move(command)), common_(common), config_(std::move(config)) {
        config_["argv"] = std::move(argv);
        config_["out"] = common.out;
        config_["format"] = common.format;
        config_["frames_every"] = common.frames_every;
        if (common.frames_every > 0 && common.out.empty())
            throw UsageError("--frames-every needs --out");
    }

    json results = json::object();

    void line(const std::string& key, const std::string& value) {
        lines_.push_back(key + "=" + value);
    }
    void line(const std::string& key, double value) { line(key, format_double(value)); }

    // Printed alone instead of key=value lines in csv mode.
    void bare(std::string text) { bare_ = std::move(text); }

    void table(const std::string& name, CsvTable t) { tables_.emplace_back(name, std::move(t)); }

    bool wants_frame(std::size_t generation) const {
        return common_.frames_every > 0 && generation % common_.frames_every == 0;
    }

    void frame(const std::string& stem, std::size_t generation, const runio::Frame& f,
               runio::FrameFormat format) {
        char name[64];
        std::snprintf(name, sizeof name, "%s_%06zu.%s", stem.c_str(), generation,
                      format == runio::FrameFormat::Pgm ? "pgm" : "ppm");
        runio::write_frame(f, fs::path(common_.out) / "frames" / name, format);
        ++frames_;
    }

    void finish(std::ostream& out) {
        if (frames_) results["frames_written"] = frames_;
        const bool as_json = common_.format == "json";
        if (as_json)
            for (const auto& [name, t] : tables_) results["tables"][name] = table_json(t);
        auto report = runio::make_report(command_, config_, common_.seed, results);
        if (!common_.out.empty()) {
            const fs::path dir(common_.out);
            runio::write_report(report, dir / "report.json");
            if (!as_json)
                for (const auto& [name, t] : tables_) runio::write_csv(t, dir / (name + ".csv"));
        }
        if (as_json) {
            out << report.dump(2) << "\n";
        } else if (bare_) {
            out << *bare_ << "\n";
        } else {
            for (const auto& l : lines_) out << l << "\n";
        }
    }

private:
    std::string command_;
    Common common_;
    json config_;
    std::vector<std::string> lines_;
    std::optional<std::string> bare_;
    std::vector<std::pair<std::string, CsvTable>> tables_;
    std::size_t frames_ = 0;
};

// ---------------------------------------------------------------------------
// map
// ---------------------------------------------------------------------------

struct MapOpts {
    std::string map = "logistic";
    double a = 4.0;
    double r0 = 20.0;
    double scale = 1.0;
    double x0 = maps::kDefaultScanX0;
    std::size_t transient = maps::kDefaultTransient;

    maps::MapSpec spec() const {
        auto s = map == "logistic" ? maps::MapSpec::logistic(a) : maps::MapSpec::ricker(r0, scale);
        s.validate();
        return s;
    }
    json to_json() const {
        return {{"map", map}, {"a", a}, {"r0", r0}, {"scale", scale}, {"x0", x0},
                {"transient", transient}};
    }
};

void add_map_opts(CLI::App* app, MapOpts& m, bool with_x0 = true) {
    app->add_option("--map", m.map, "logistic or ricker")
        ->check(CLI::IsMember({"logistic", "ricker"}))
        ->capture_default_str();
    app->add_option("--a", m.a, "Logistic parameter")->capture_default_str();
    app->add_option("--r0", m.r0, "Ricker growth rate")->capture_default_str();
    app->add_option("--scale", m.scale, "Ricker density scale")->capture_default_str();
    if (with_x0) app->add_option("--x0", m.x0, "Initial state")->capture_default_str();
    app->add_option("--transient", m.transient, "Iterates discarded first")->capture_default_str();
}

// ---------------------------------------------------------------------------
// forecast
// ---------------------------------------------------------------------------

struct SourceOpts {
    std::string input;
    std::string source = "logistic";
    std::size_t length = 1000;
    std::size_t k = 10;
    double period = 20.0;
    double amplitude = 1.0;
    double phi = 0.9;
    double sd = 1.0;
    MapOpts map;

    forecast::Series load(std::uint64_t seed) const {
        if (!input.empty()) return {runio::read_series_csv(input), fs::path(input).filename().string()};
        if (source == "logistic" || source == "ricker") {
            MapOpts m = map;
            m.map = source;
            return forecast::map_series(m.spec(), length, m.x0, m.transient);
        }
        if (source == "noise") return forecast::uniform_noise(length, seed);
        if (source == "sine") return forecast::sine_series(length, period, amplitude);
        if (source == "ar1") return forecast::ar1_series(length, phi, sd, seed);
        auto comps = forecast::independent_logistic(k, map.a, seed);
        return forecast::aggregate_series(comps, length, map.transient);
    }
    json to_json() const {
        json j = {{"input", input}, {"source", source}, {"length", length}, {"k", k},
                  {"period", period}, {"amplitude", amplitude}, {"phi", phi}, {"sd", sd}};
        j["map"] = map.to_json();
        return j;
    }
};

void add_source_opts(CLI::App* app, SourceOpts& s) {
    app->add_option("--input", s.input, "Single-column series CSV (overrides --source)");
    app->add_option("--source", s.source, "Synthetic series")
        ->check(CLI::IsMember({"logistic", "ricker", "noise", "sine", "ar1", "aggregate"}))
        ->capture_default_str();
    app->add_option("--length", s.length, "Synthetic series length")->capture_default_str();
    app->add_option("--k", s.k, "Components summed by --source aggregate")->capture_default_str();
    app->add_option("--period", s.period, "Sine samples per period")->capture_default_str();
    app->add_option("--amplitude", s.amplitude, "Sine amplitude")->capture_default_str();
    app->add_option("--phi", s.phi, "AR(1) coefficient")->capture_default_str();
    app->add_option("--sd", s.sd, "AR(1) noise standard deviation")->capture_default_str();
    add_map_opts(app, s.map);
}

struct EmbedOpts {
    std::size_t E = 3;
    std::size_t tau = 1;
    std::size_t exclusion = 0;
    std::string protocol = "half-split-forward";
    std::size_t p_max = 10;

    forecast::EmbeddingConfig config() const {
        forecast::EmbeddingConfig c{E, tau, exclusion, forecast::parse_protocol(protocol)};
        c.validate();
        return c;
    }
    json to_json() const {
        return {{"E", E}, {"tau", tau}, {"exclusion", exclusion}, {"protocol", protocol},
                {"p_max", p_max}};
    }
};

void add_embed_opts(CLI::App* app, EmbedOpts& e, bool with_pmax = true) {
    app->add_option("--e", e.E, "Embedding dimension")->capture_default_str();
    app->add_option("--tau", e.tau, "Embedding lag")->capture_default_str();
    app->add_option("--exclusion", e.exclusion, "Exclusion half-width")->capture_default_str();
    app->add_option("--protocol", e.protocol, "Library/prediction split")
        ->check(CLI::IsMember({"half-split-forward", "half-split-backward", "full-with-exclusion"}))
        ->capture_default_str();
    if (with_pmax) app->add_option("--p-max", e.p_max, "Largest prediction interval")->capture_default_str();
}

CsvTable rho_table(const forecast::RhoCurve& c) {
    CsvTable t{{"T_p", "rho", "n"}, {}};
    for (const auto& p : c.points)
        t.rows.push_back({static_cast<double>(p.tp), p.rho, static_cast<double>(p.n)});
    return t;
}

json rho_json(const forecast::RhoCurve& c) {
    json pts = json::array();
    for (const auto& p : c.points)
        pts.push_back({{"T_p", p.tp}, {"rho", p.defined ? json(p.rho) : json(nullptr)}, {"n", p.n}});
    return {{"points", pts},
            {"decay_rate", std::isfinite(c.decay_rate) ? json(c.decay_rate) : json(nullptr)}};
}

// ---------------------------------------------------------------------------
// lattice
// ---------------------------------------------------------------------------

struct LatticeOpts {
    std::size_t n = 30;
    double r0 = 2.0;
    double attack = 1.0;
    double c = 1.0;
    double mu_h = 1.0;
    double mu_p = 0.89;
    std::string boundary = "cyclic";
    std::size_t steps = 2000;
    std::string init = "random";
    double lo = 0.9;
    double hi = 1.1;
    std::optional<double> h0;
    std::optional<double> p0;
    std::optional<double> extinction_eps;

    lattice::PatchParams params() const {
        lattice::PatchParams p{r0, attack, c};
        p.validate();
        return p;
    }
    lattice::LatticeConfig config(std::uint64_t seed, const lattice::PatchParams& pp) const {
        lattice::LatticeConfig cfg;
        cfg.n = n;
        cfg.mu_h = mu_h;
        cfg.mu_p = mu_p;
        cfg.boundary = lattice::parse_boundary(boundary);
        cfg.steps = steps;
        cfg.extinction_eps = extinction_eps;
        if (init == "random") {
            cfg.init = lattice::RandomAroundEquilibrium{lo, hi, seed};
        } else {
            const auto eq = lattice::nb_equilibrium(pp);
            cfg.init = lattice::CentralSeed{h0.value_or(eq.h), p0.value_or(eq.p)};
        }
        cfg.validate();
        return cfg;
    }
    json to_json() const {
        auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
        return {{"n", n}, {"r0", r0}, {"attack", attack}, {"c", c}, {"mu_h", mu_h},
                {"mu_p", mu_p}, {"boundary", boundary}, {"steps", steps}, {"init", init},
                {"lo", lo}, {"hi", hi}, {"h0", opt(h0)}, {"p0", opt(p0)},
                {"extinction_eps", opt(extinction_eps)}};
    }
};

void add_lattice_opts(CLI::App* app, LatticeOpts& l) {
    app->add_option("--n", l.n, "Lattice side")->capture_default_str();
    app->add_option("--r0", l.r0, "Host growth rate")->capture_default_str();
    app->add_option("--attack", l.attack, "Parasitoid searching efficiency")->capture_default_str();
    app->add_option("--c", l.c, "Parasitoids emerging per parasitised host")->capture_default_str();
    app->add_option("--mu-h", l.mu_h, "Host dispersal fraction")->capture_default_str();
    app->add_option("--mu-p", l.mu_p, "Parasitoid dispersal fraction")->capture_default_str();
    app->add_option("--boundary", l.boundary, "Edge rule")
        ->check(CLI::IsMember({"cyclic", "absorbing", "redistribute"}))
        ->capture_default_str();
    app->add_option("--steps", l.steps, "Generations")->capture_default_str();
    app->add_option("--init", l.init, "random (equilibrium times factors) or central")
        ->check(CLI::IsMember({"random", "central"}))
        ->capture_default_str();
    app->add_option("--lo", l.lo, "Lowest random factor")->capture_default_str();
    app->add_option("--hi", l.hi, "Highest random factor")->capture_default_str();
    app->add_option("--h0", l.h0, "Central hosts (default H*)");
    app->add_option("--p0", l.p0, "Central parasitoids (default P*)");
    app->add_option("--extinction-eps", l.extinction_eps, "Mean-H extinction level (default 1e-10 H*)");
}

// ---------------------------------------------------------------------------
// game
// ---------------------------------------------------------------------------

struct GameOpts {
    std::size_t n = 400;
    double b = 1.9;
    double punishment = 0.0;
    std::string neighborhood = "moore8+self";
    std::string boundary = "fixed";
    std::string update = "sync";
    double m = 8.0;
    std::size_t generations = 300;
    std::string init = "random";
    double fc0 = 0.6;

    games::GameConfig config(std::uint64_t seed) const {
        games::GameConfig g;
        g.n = n;
        g.payoffs = {b, punishment};
        g.neighborhood = games::parse_neighborhood(neighborhood);
        g.boundary = games::parse_boundary_rule(boundary);
        if (update == "sync")
            g.update = games::SyncDeterministic{};
        else if (update == "probabilistic")
            g.update = games::SyncProbabilistic{m};
        else
            g.update = games::AsyncRandomOrder{};
        g.generations = generations;
        if (init == "random")
            g.init = games::RandomInit{fc0};
        else
            g.init = games::SingleDefectorCenter{};
        g.seed = seed;
        g.validate();
        return g;
    }
    json to_json() const {
        return {{"n", n}, {"b", b}, {"punishment", punishment}, {"neighborhood", neighborhood},
                {"boundary", boundary}, {"update", update}, {"m", m},
                {"generations", generations}, {"init", init}, {"fc0", fc0}};
    }
};

void add_payoff_opts(CLI::App* app, GameOpts& g) {
    app->add_option("--b", g.b, "Temptation to defect")->capture_default_str();
    app->add_option("--punishment", g.punishment, "Payoff for mutual defection")->capture_default_str();
    app->add_option("--neighborhood", g.neighborhood, "Sites each player meets")
        ->check(CLI::IsMember({"moore8+self", "moore8", "vonNeumann4"}))
        ->capture_default_str();
    app->add_option("--boundary", g.boundary, "Edge rule")
        ->check(CLI::IsMember({"fixed", "periodic"}))
        ->capture_default_str();
}

void add_game_opts(CLI::App* app, GameOpts& g) {
    app->add_option("--n", g.n, "Lattice side")->capture_default_str();
    add_payoff_opts(app, g);
    app->add_option("--update", g.update, "Update rule")
        ->check(CLI::IsMember({"sync", "probabilistic", "async"}))
        ->capture_default_str();
    app->add_option("--m", g.m, "Exponent of the probabilistic rule")->capture_default_str();
    app->add_option("--generations", g.generations, "Generations")->capture_default_str();
}

CsvTable fc_table(std::span<const double> fc) {
    CsvTable t{{"t", "f_C"}, {}};
    for (std::size_t i = 0; i < fc.size(); ++i) t.rows.push_back({static_cast<double>(i), fc[i]});
    return t;
}

// ---------------------------------------------------------------------------

struct Leaf {
    CLI::App* app;
    std::string command;
    std::function<json()> config;
    std::function<void(Run&)> body;
};

int run_cli(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"chaoslab: chaotic maps, nonlinear forecasting, host-parasitoid lattices "
                 "and spatial games"};
    app.name(args.empty() ? "chaoslab" : fs::path(args[0]).filename().string());
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);

    Common common;
    std::vector<Leaf> leaves;
    auto leaf = [&](CLI::App* group, const std::string& name, const std::string& desc) {
        auto* sub = group->add_subcommand(name, desc);
        add_common(sub, common);
        return sub;
    };

    // map ------------------------------------------------------------------
    auto* map = app.add_subcommand("map", "One-dimensional maps")->require_subcommand(1);
    MapOpts mo;

    std::size_t orbit_n = 1000;
    {
        auto* s = leaf(map, "orbit", "Iterate a map and write the orbit");
        add_map_opts(s, mo);
        s->add_option("--n", orbit_n, "Samples kept")->capture_default_str();
        leaves.push_back({s, "map orbit", [&] { auto j = mo.to_json(); j["n"] = orbit_n; return j; },
                          [&](Run& run) {
                              auto orbit = maps::iterate(mo.spec(), mo.x0, orbit_n, mo.transient);
                              CsvTable t{{"t", "x"}, {}};
                              for (std::size_t i = 0; i < orbit.samples.size(); ++i)
                                  t.rows.push_back({static_cast<double>(i), orbit.samples[i]});
                              run.results["n"] = orbit.samples.size();
                              if (!orbit.samples.empty()) {
                                  run.results["last"] = orbit.samples.back();
                                  run.line("last", orbit.samples.back());
                              }
                              run.line("n", std::to_string(orbit.samples.size()));
                              run.table("orbit", std::move(t));
                          }});
    }

    std::size_t lyap_n = 1000000;
    std::size_t lyap_window = 0;
    double lyap_epsilon = 1e-6;
    {
        auto* s = leaf(map, "lyapunov", "Lyapunov exponent and predictability horizon");
        add_map_opts(s, mo);
        s->add_option("--n", lyap_n, "Iterates averaged")->capture_default_str();
        s->add_option("--window", lyap_window, "Sliding-window length (0 = none)")->capture_default_str();
        s->add_option("--epsilon", lyap_epsilon, "Initial uncertainty for the horizon")->capture_default_str();
        leaves.push_back(
            {s, "map lyapunov",
             [&] {
                 auto j = mo.to_json();
                 j["n"] = lyap_n;
                 j["window"] = lyap_window;
                 j["epsilon"] = lyap_epsilon;
                 return j;
             },
             [&](Run& run) {
                 std::optional<std::size_t> window;
                 if (lyap_window) window = lyap_window;
                 auto est = maps::lyapunov(mo.spec(), mo.x0, lyap_n, mo.transient, window);
                 run.results["lambda"] = est.lambda;
                 run.results["n_iterates"] = est.n_iterates;
                 run.results["clamped"] = est.clamped;
                 run.line("lambda", est.lambda);
                 if (est.lambda > 0.0) {
                     const double h = maps::lyapunov_horizon(est.lambda, lyap_epsilon);
                     run.results["horizon"] = h;
                     run.line("horizon", h);
                 } else {
                     run.results["horizon"] = nullptr;
                     run.line("horizon", "none");
                 }
                 if (window) {
                     CsvTable t{{"t", "lambda"}, {}};
                     for (std::size_t i = 0; i < est.window_series.size(); ++i)
                         t.rows.push_back({static_cast<double>(i), est.window_series[i]});
                     run.table("window", std::move(t));
                 }
             }});
    }

    double bif_lo = 2.8, bif_hi = 4.0;
    std::size_t bif_params = 400, bif_settle = 1000, bif_keep = 100, bif_lyap_n = 20000;
    {
        auto* s = leaf(map, "bifurcate", "Bifurcation diagram and Lyapunov scan");
        add_map_opts(s, mo);
        s->add_option("--lo", bif_lo, "Lowest control value")->capture_default_str();
        s->add_option("--hi", bif_hi, "Highest control value")->capture_default_str();
        s->add_option("--params", bif_params, "Control values scanned")->capture_default_str();
        s->add_option("--settle", bif_settle, "Iterates before sampling")->capture_default_str();
        s->add_option("--keep", bif_keep, "Samples per control value")->capture_default_str();
        s->add_option("--lyap-n", bif_lyap_n, "Iterates per Lyapunov estimate (0 = skip)")
            ->capture_default_str();
        leaves.push_back(
            {s, "map bifurcate",
             [&] {
                 auto j = mo.to_json();
                 j.update({{"lo", bif_lo}, {"hi", bif_hi}, {"params", bif_params},
                           {"settle", bif_settle}, {"keep", bif_keep}, {"lyap_n", bif_lyap_n}});
                 return j;
             },
             [&](Run& run) {
                 const auto spec = mo.spec();
                 auto cols = maps::bifurcation_scan(spec, bif_lo, bif_hi, bif_params, bif_settle,
                                                    bif_keep, mo.x0);
                 CsvTable t{{"param", "x"}, {}};
                 for (const auto& c : cols)
                     for (double x : c.samples) t.rows.push_back({c.param, x});
                 run.table("bifurcation", std::move(t));
                 run.results["columns"] = cols.size();
                 if (bif_lyap_n) {
                     auto scan = maps::lyapunov_scan(spec, bif_lo, bif_hi, bif_params, bif_lyap_n,
                                                     mo.transient, mo.x0);
                     CsvTable l{{"param", "lambda"}, {}};
                     for (const auto& p : scan) l.rows.push_back({p.param, p.lambda});
                     run.table("lyapunov", std::move(l));
                     auto onset = maps::chaos_onset(scan);
                     run.results["onset"] = onset ? json(*onset) : json(nullptr);
                     run.line("onset", onset ? format_double(*onset) : "none");
                 }
                 run.line("columns", std::to_string(cols.size()));
             }});
    }

    std::size_t dens_n = 1000000, dens_bins = 50;
    double dens_lo = 0.0, dens_hi = 1.0;
    {
        auto* s = leaf(map, "density", "Invariant-density histogram");
        add_map_opts(s, mo);
        s->add_option("--n", dens_n, "Samples")->capture_default_str();
        s->add_option("--bins", dens_bins, "Histogram bins")->capture_default_str();
        s->add_option("--lo", dens_lo, "Histogram lower edge")->capture_default_str();
        s->add_option("--hi", dens_hi, "Histogram upper edge")->capture_default_str();
        leaves.push_back(
            {s, "map density",
             [&] {
                 auto j = mo.to_json();
                 j.update({{"n", dens_n}, {"bins", dens_bins}, {"lo", dens_lo}, {"hi", dens_hi}});
                 return j;
             },
             [&](Run& run) {
                 auto orbit = maps::iterate(mo.spec(), mo.x0, dens_n, mo.transient);
                 auto hist = maps::density_histogram(orbit.samples, dens_bins, dens_lo, dens_hi);
                 const bool unit = dens_lo == 0.0 && dens_hi == 1.0;
                 std::vector<double> ref;
                 if (unit) ref = maps::arcsine_reference(dens_bins);
                 CsvTable t{{"bin_lo", "bin_hi", "mass", "arcsine"}, {}};
                 const double w = (dens_hi - dens_lo) / static_cast<double>(dens_bins);
                 for (std::size_t i = 0; i < dens_bins; ++i)
                     t.rows.push_back({dens_lo + w * static_cast<double>(i),
                                       dens_lo + w * static_cast<double>(i + 1), hist.mass[i],
                                       unit ? ref[i] : std::nan("")});
                 run.table("density", std::move(t));
                 run.results["occupied_bins"] = hist.occupied_bins();
                 run.line("occupied_bins", std::to_string(hist.occupied_bins()));
                 if (unit) {
                     const double l1 = maps::l1_distance(hist.mass, ref);
                     run.results["l1_arcsine"] = l1;
                     run.line("l1_arcsine", l1);
                 }
             }});
    }

    // forecast -------------------------------------------------------------
    auto* fc = app.add_subcommand("forecast", "Simplex forecasting")->require_subcommand(1);
    SourceOpts so;
    EmbedOpts eo;
    auto source_config = [&] {
        auto j = so.to_json();
        j["embedding"] = eo.to_json();
        return j;
    };

    {
        auto* s = leaf(fc, "rho", "Forecast skill against prediction interval");
        add_source_opts(s, so);
        add_embed_opts(s, eo);
        leaves.push_back({s, "forecast rho", source_config, [&](Run& run) {
                              auto curve = forecast::rho_curve(so.load(common.seed), eo.config(), eo.p_max);
                              run.results["rho"] = rho_json(curve);
                              run.line("rho_1", curve.rho(1));
                              run.line("rho_pmax", curve.rho(curve.p_max()));
                              run.line("decay_rate", curve.decay_rate);
                              run.table("rho", rho_table(curve));
                          }});
    }

    std::vector<std::size_t> e_values{1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, tau_values{1, 2, 3};
    std::size_t p_eval = 1;
    {
        auto* s = leaf(fc, "search", "Grid search over embedding dimension and lag");
        add_source_opts(s, so);
        add_embed_opts(s, eo, false);
        s->add_option("--e-values", e_values, "Dimensions tried")->delimiter(',')->capture_default_str();
        s->add_option("--tau-values", tau_values, "Lags tried")->delimiter(',')->capture_default_str();
        s->add_option("--p-eval", p_eval, "Prediction interval scored")->capture_default_str();
        leaves.push_back({s, "forecast search",
                          [&] {
                              auto j = source_config();
                              j.update({{"e_values", e_values}, {"tau_values", tau_values},
                                        {"p_eval", p_eval}});
                              return j;
                          },
                          [&](Run& run) {
                              auto res = forecast::grid_search(so.load(common.seed), e_values,
                                                               tau_values, eo.config(), p_eval);
                              CsvTable t{{"E", "tau", "rho", "admissible"}, {}};
                              for (const auto& g : res.table)
                                  t.rows.push_back({static_cast<double>(g.E),
                                                    static_cast<double>(g.tau), g.score,
                                                    g.admissible ? 1.0 : 0.0});
                              run.table("search", std::move(t));
                              run.results["E"] = res.E;
                              run.results["tau"] = res.tau;
                              run.results["score"] = res.score;
                              run.line("E", std::to_string(res.E));
                              run.line("tau", std::to_string(res.tau));
                              run.line("rho", res.score);
                          }});
    }

    std::size_t ar_order = 0;
    auto baseline_curve = [&](const forecast::Series& series, const forecast::EmbeddingConfig& cfg) {
        return forecast::ar_rho_curve(series, ar_order ? ar_order : cfg.E, cfg.protocol, eo.p_max);
    };
    {
        auto* s = leaf(fc, "baseline", "Simplex skill beside a linear autoregression");
        add_source_opts(s, so);
        add_embed_opts(s, eo);
        s->add_option("--order", ar_order, "Autoregression order (0 = E)")->capture_default_str();
        leaves.push_back({s, "forecast baseline",
                          [&] {
                              auto j = source_config();
                              j["order"] = ar_order;
                              return j;
                          },
                          [&](Run& run) {
                              const auto series = so.load(common.seed);
                              const auto cfg = eo.config();
                              auto simplex = forecast::rho_curve(series, cfg, eo.p_max);
                              auto ar = baseline_curve(series, cfg);
                              run.results["simplex"] = rho_json(simplex);
                              run.results["ar"] = rho_json(ar);
                              run.line("rho_1", simplex.rho(1));
                              run.line("ar_rho_1", ar.rho(1));
                              run.table("rho", rho_table(simplex));
                              run.table("ar_rho", rho_table(ar));
                          }});
    }

    forecast::ClassifyThresholds th;
    bool use_baseline = true;
    {
        auto* s = leaf(fc, "classify", "Label a series from its rho curve");
        add_source_opts(s, so);
        add_embed_opts(s, eo);
        s->add_option("--order", ar_order, "Autoregression order (0 = E)")->capture_default_str();
        s->add_option("--skill", th.skill, "rho(1) needed for skill")->capture_default_str();
        s->add_option("--decay", th.decay, "Drop needed for chaos-like")->capture_default_str();
        s->add_option("--noise", th.noise, "max |rho| below this is noise-like")->capture_default_str();
        s->add_option("--flatness", th.flatness, "Range below this is periodic")->capture_default_str();
        s->add_flag("!--no-baseline", use_baseline, "Skip the autoregression comparison");
        leaves.push_back(
            {s, "forecast classify",
             [&] {
                 auto j = source_config();
                 j.update({{"order", ar_order}, {"skill", th.skill}, {"decay", th.decay},
                           {"noise", th.noise}, {"flatness", th.flatness},
                           {"baseline", use_baseline}});
                 return j;
             },
             [&](Run& run) {
                 const auto series = so.load(common.seed);
                 const auto cfg = eo.config();
                 auto curve = forecast::rho_curve(series, cfg, eo.p_max);
                 std::optional<forecast::RhoCurve> ar;
                 if (use_baseline) ar = baseline_curve(series, cfg);
                 auto cls = forecast::classify(curve, ar ? &*ar : nullptr, th);
                 const std::string verdict(forecast::to_string(cls.verdict));
                 run.results["verdict"] = verdict;
                 run.results["rho_first"] = cls.rho_first;
                 run.results["rho_last"] = cls.rho_last;
                 run.results["max_abs_rho"] = cls.max_abs_rho;
                 run.results["rho_range"] = cls.rho_range;
                 run.results["baseline_margin"] =
                     cls.baseline_margin ? json(*cls.baseline_margin) : json(nullptr);
                 run.results["rho"] = rho_json(curve);
                 run.line("verdict", verdict);
                 run.line("rho_first", cls.rho_first);
                 run.line("rho_last", cls.rho_last);
                 if (cls.baseline_margin) run.line("baseline_margin", *cls.baseline_margin);
                 run.table("rho", rho_table(curve));
             }});
    }

    forecast::AggregationSettings agg;
    std::vector<std::size_t> k_values{1, 2, 5, 10, 50};
    EmbedOpts agg_eo;
    {
        auto* s = leaf(fc, "aggregate", "Skill of summed independent logistic maps");
        add_embed_opts(s, agg_eo, false);
        s->add_option("--k-values", k_values, "Component counts")->delimiter(',')->capture_default_str();
        s->add_option("--a", agg.a, "Logistic parameter")->capture_default_str();
        s->add_option("--length", agg.length, "Series length")->capture_default_str();
        s->add_option("--replicates", agg.replicates, "Independent sums per k")->capture_default_str();
        s->add_option("--horizon", agg.horizon, "Prediction interval scored")->capture_default_str();
        leaves.push_back({s, "forecast aggregate",
                          [&] {
                              return json{{"k_values", k_values}, {"a", agg.a},
                                          {"length", agg.length}, {"replicates", agg.replicates},
                                          {"horizon", agg.horizon},
                                          {"embedding", agg_eo.to_json()}};
                          },
                          [&](Run& run) {
                              agg.embedding = agg_eo.config();
                              agg.base_seed = common.seed;
                              auto pts = forecast::aggregation_experiment(k_values, agg);
                              CsvTable t{{"k", "rho"}, {}};
                              json arr = json::array();
                              for (const auto& p : pts) {
                                  t.rows.push_back({static_cast<double>(p.k), p.mean_rho});
                                  arr.push_back({{"k", p.k}, {"rho", p.mean_rho},
                                                 {"replicates", p.replicate_rho}});
                                  run.line("rho_k" + std::to_string(p.k), p.mean_rho);
                              }
                              run.results["points"] = arr;
                              run.table("aggregate", std::move(t));
                          }});
    }

    // lattice --------------------------------------------------------------
    auto* lat = app.add_subcommand("lattice", "Host-parasitoid coupled map lattice")
                    ->require_subcommand(1);
    LatticeOpts lo;
    lattice::RegimeThresholds rt;

    auto lattice_body = [&](Run& run, bool strict) {
        const auto params = lo.params();
        const auto cfg = lo.config(common.seed, params);
        const auto eq = lattice::nb_equilibrium(params);
        auto rec = lattice::simulate(cfg, params, {common.frames_every});
        for (const auto& f : rec.frames)
            run.frame("lattice", f.t, lattice::render_frame(f, eq), runio::FrameFormat::Pgm);
        CsvTable summary{{"t", "meanH", "meanP"}, {}};
        CsvTable diag{{"t", "stasis", "spatialVarH"}, {}};
        for (std::size_t t = 0; t < rec.mean_h.size(); ++t) {
            summary.rows.push_back({static_cast<double>(t), rec.mean_h[t], rec.mean_p[t]});
            diag.rows.push_back({static_cast<double>(t), rec.stasis[t], rec.spatial_var_h[t]});
        }
        run.table("summary", std::move(summary));
        run.table("diagnostics", std::move(diag));
        const std::size_t generations = rec.mean_h.size() - 1;
        run.results["generations"] = generations;
        run.results["extinct"] = rec.extinct;
        run.results["equilibrium"] = {{"h", eq.h}, {"p", eq.p}};
        run.line("generations", std::to_string(generations));
        run.line("extinct", rec.extinct ? "true" : "false");
        std::optional<lattice::RegimeReport> rep;
        try {
            rep = lattice::classify_regime(rec, rt);
        } catch (const DomainError& e) {
            if (strict) throw;
            run.results["regime"] = nullptr;
            run.results["regime_note"] = e.what();
            run.line("label", "unclassified");
        }
        if (rep) {
            const std::string label(lattice::to_string(rep->label));
            run.results["regime"] = {{"label", label},
                                     {"generations", rep->generations},
                                     {"post_transient", rep->post_transient},
                                     {"temporal_variance", rep->temporal_variance},
                                     {"spatial_variance", rep->spatial_variance},
                                     {"stasis_residual", rep->stasis_residual},
                                     {"min_mean_h", rep->min_mean_h},
                                     {"max_mean_h", rep->max_mean_h},
                                     {"dominant_period", rep->dominant_period}};
            run.line("label", label);
            run.line("stasis_residual", rep->stasis_residual);
            run.line("spatial_variance", rep->spatial_variance);
            run.line("temporal_variance", rep->temporal_variance);
            run.line("dominant_period", std::to_string(rep->dominant_period));
        }
    };
    auto lattice_config = [&] {
        auto j = lo.to_json();
        j.update({{"stasis_tolerance", rt.stasis_tolerance},
                  {"transient_fraction", rt.transient_fraction},
                  {"min_post_transient", rt.min_post_transient}});
        return j;
    };
    {
        auto* s = leaf(lat, "run", "Simulate and write mean densities, diagnostics and frames");
        add_lattice_opts(s, lo);
        leaves.push_back({s, "lattice run", lattice_config, [&](Run& run) { lattice_body(run, false); }});
    }
    {
        auto* s = leaf(lat, "classify", "Simulate and classify the dynamical regime");
        add_lattice_opts(s, lo);
        s->add_option("--stasis-tol", rt.stasis_tolerance, "Largest change counted as frozen")
            ->capture_default_str();
        s->add_option("--transient-fraction", rt.transient_fraction, "Leading share discarded")
            ->capture_default_str();
        s->add_option("--min-post", rt.min_post_transient, "Generations needed after the transient")
            ->capture_default_str();
        leaves.push_back({s, "lattice classify", lattice_config, [&](Run& run) { lattice_body(run, true); }});
    }

    // game -----------------------------------------------------------------
    auto* game = app.add_subcommand("game", "Spatial Prisoner's Dilemma")->require_subcommand(1);
    GameOpts go;
    std::optional<std::size_t> mean_from;

    auto evolve = [&](Run& run, const games::GameConfig& cfg, auto&& on_board) {
        auto board = games::initial_board(cfg);
        std::vector<double> fcs{board.fraction_c()};
        on_board(board);
        games::StepStats stats;
        if (run.wants_frame(0)) run.frame("game", 0, games::render_frame(board), runio::FrameFormat::Ppm);
        for (std::size_t g = 0; g < cfg.generations; ++g) {
            board = games::step(board, cfg, &stats);
            fcs.push_back(board.fraction_c());
            on_board(board);
            if (run.wants_frame(board.generation()))
                run.frame("game", board.generation(), games::render_frame(board),
                          runio::FrameFormat::Ppm);
        }
        run.results["degenerate"] = stats.degenerate;
        return fcs;
    };

    {
        auto* s = leaf(game, "run", "Evolve a board and record the cooperator fraction");
        add_game_opts(s, go);
        s->add_option("--init", go.init, "random or single-d")
            ->check(CLI::IsMember({"random", "single-d"}))
            ->capture_default_str();
        s->add_option("--fc0", go.fc0, "Initial cooperator fraction")->capture_default_str();
        s->add_option("--mean-from", mean_from, "First generation averaged (default 2/3 of the run)");
        leaves.push_back({s, "game run",
                          [&] {
                              auto j = go.to_json();
                              j["mean_from"] = mean_from ? json(*mean_from) : json(nullptr);
                              return j;
                          },
                          [&](Run& run) {
                              const auto cfg = go.config(common.seed);
                              auto fcs = evolve(run, cfg, [](const games::Board&) {});
                              const std::size_t from =
                                  std::min(mean_from.value_or(cfg.generations * 2 / 3), cfg.generations);
                              double sum = 0.0;
                              for (std::size_t t = from; t < fcs.size(); ++t) sum += fcs[t];
                              const double mean = sum / static_cast<double>(fcs.size() - from);
                              run.results["fc_final"] = fcs.back();
                              run.results["fc_mean"] = mean;
                              run.results["mean_from"] = from;
                              run.results["fc_theory"] = games::fc_theory();
                              run.line("fc_final", fcs.back());
                              run.line("fc_mean", mean);
                              run.table("fc", fc_table(fcs));
                          }});
    }

    GameOpts ko;
    ko.n = 99;
    ko.generations = 200;
    ko.init = "single-d";
    {
        auto* s = leaf(game, "kaleidoscope", "Symmetric run from a single central defector");
        add_game_opts(s, ko);
        leaves.push_back({s, "game kaleidoscope", [&] { return ko.to_json(); }, [&](Run& run) {
                              const auto cfg = ko.config(common.seed);
                              std::optional<std::size_t> broken;
                              auto fcs = evolve(run, cfg, [&](const games::Board& b) {
                                  if (!broken && !games::has_dihedral_symmetry(b)) broken = b.generation();
                              });
                              auto minima = games::local_minima(fcs);
                              run.results["symmetric"] = !broken;
                              run.results["first_asymmetric"] = broken ? json(*broken) : json(nullptr);
                              run.results["minima"] = minima;
                              std::string list;
                              for (auto t : minima) list += (list.empty() ? "" : ",") + std::to_string(t);
                              run.line("symmetric", broken ? "false" : "true");
                              run.line("minima", list.empty() ? "none" : list);
                              run.table("fc", fc_table(fcs));
                          }});
    }

    GameOpts co;
    std::string cluster_kind = "d";
    std::size_t cluster_k = 2, cluster_gens = 20;
    {
        auto* s = leaf(game, "cluster", "Grow or shrink a block of the minority strategy");
        add_payoff_opts(s, co);
        s->add_option("--kind", cluster_kind, "d = defector block among C, c = cooperator block among D")
            ->check(CLI::IsMember({"d", "c"}))
            ->capture_default_str();
        s->add_option("--k", cluster_k, "Block side")->capture_default_str();
        s->add_option("--generations", cluster_gens, "Generations")->capture_default_str();
        leaves.push_back({s, "game cluster",
                          [&] {
                              json j{{"b", co.b}, {"punishment", co.punishment},
                                     {"neighborhood", co.neighborhood}, {"boundary", co.boundary},
                                     {"kind", cluster_kind}, {"k", cluster_k},
                                     {"generations", cluster_gens}};
                              return j;
                          },
                          [&](Run& run) {
                              games::GameConfig tmpl;
                              tmpl.payoffs = {co.b, co.punishment};
                              tmpl.neighborhood = games::parse_neighborhood(co.neighborhood);
                              tmpl.boundary = games::parse_boundary_rule(co.boundary);
                              auto res = games::cluster_experiment(
                                  co.b, cluster_kind == "d" ? games::ClusterKind::DBlock : games::ClusterKind::CBlock,
                                  cluster_k, cluster_gens, tmpl);
                              CsvTable t{{"t", "count"}, {}};
                              for (std::size_t i = 0; i < res.minority_counts.size(); ++i)
                                  t.rows.push_back({static_cast<double>(i),
                                                    static_cast<double>(res.minority_counts[i])});
                              const std::string verdict(games::to_string(res.verdict));
                              run.results["verdict"] = verdict;
                              run.results["counts"] = res.minority_counts;
                              run.results["n"] = res.n;
                              run.line("verdict", verdict);
                              run.line("initial", std::to_string(res.minority_counts.front()));
                              run.line("final", std::to_string(res.minority_counts.back()));
                              run.table("counts", std::move(t));
                          }});
    }

    {
        auto* s = leaf(game, "fc-theory", "Predicted asymptotic cooperator fraction");
        leaves.push_back({s, "game fc-theory", [] { return json::object(); }, [&](Run& run) {
                              const double v = games::fc_theory();
                              char buf[32];
                              std::snprintf(buf, sizeof buf, "%.10f", v);
                              run.results["fc_theory"] = v;
                              run.bare(buf);
                          }});
    }

    std::vector<std::string> argv(args.begin(), args.end());
    try {
        std::vector<std::string> rev(argv.rbegin(), argv.rend());
        if (!rev.empty()) rev.pop_back();
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    for (auto& l : leaves) {
        if (!l.app->parsed()) continue;
        try {
            Run run(l.command, common, l.config(), argv);
            l.body(run);
            run.finish(out);
        } catch (const UsageError& e) {
            err << "usage error: " << e.what() << "\n" << l.app->help();
            return kExitUsage;
        }
        return kExitOk;
    }
    err << app.help();
    return kExitUsage;
}

}  // namespace

int dispatch(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
    try {
        return run_cli(args, out, err);
    } catch (const NumericError& e) {
        err << "numeric error: " << e.what() << "\n";
    } catch (const DomainError& e) {
        err << "invalid input: " << e.what() << "\n";
    } catch (const IoError& e) {
        err << "i/o error: " << e.what() << "\n";
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
    }
    return kExitRuntime;
}

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    std::vector<std::string> args(argv, argv + argc);
    return dispatch(args, out, err);
}

}  // namespace chaoslab::cli
