#include "chaoslab/games.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "chaoslab/error.hpp"
#include "chaoslab/parallel.hpp"
#include "chaoslab/runio.hpp"

namespace chaoslab::games {

namespace {

struct Offset {
    int dr, dc;
};

constexpr std::array<Offset, 8> kMoore = {{
    {-1, -1}, {-1, 0}, {-1, 1}, {0, -1}, {0, 1}, {1, -1}, {1, 0}, {1, 1},
}};
constexpr std::array<Offset, 4> kVonNeumann = {{{-1, 0}, {0, -1}, {0, 1}, {1, 0}}};

std::span<const Offset> offsets(Neighborhood nb) noexcept {
    if (nb == Neighborhood::VonNeumann4) return kVonNeumann;
    return kMoore;
}

// Linear index of the neighbour, or -1 off a fixed boundary.
long neighbour(std::size_t n, std::size_t r, std::size_t c, Offset o, BoundaryRule b) noexcept {
    const long nn = static_cast<long>(n);
    long rr = static_cast<long>(r) + o.dr;
    long cc = static_cast<long>(c) + o.dc;
    if (b == BoundaryRule::Periodic) {
        rr = (rr % nn + nn) % nn;
        cc = (cc % nn + nn) % nn;
    } else if (rr < 0 || rr >= nn || cc < 0 || cc >= nn) {
        return -1;
    }
    return rr * nn + cc;
}

// Scores from integer C/D counts so that symmetric sites get identical bits.
double score_cells(std::span<const Strategy> cells, std::size_t n, std::size_t r, std::size_t c,
                   const Payoffs& pay, Neighborhood nb, BoundaryRule b) noexcept {
    std::size_t n_c = 0, n_d = 0;
    auto tally = [&](Strategy s) { (s == Strategy::C ? n_c : n_d)++; };
    const Strategy self = cells[r * n + c];
    if (nb == Neighborhood::Moore8Self) tally(self);
    for (Offset o : offsets(nb)) {
        const long j = neighbour(n, r, c, o, b);
        if (j >= 0) tally(cells[static_cast<std::size_t>(j)]);
    }
    return static_cast<double>(n_c) * pay.payoff(self, Strategy::C) +
           static_cast<double>(n_d) * pay.payoff(self, Strategy::D);
}

template <typename ScoreOf>
Strategy deterministic_winner(std::span<const Strategy> cells, std::size_t n, std::size_t r,
                              std::size_t c, const GameConfig& cfg, ScoreOf&& score_of) {
    const std::size_t self = r * n + c;
    const double own = score_of(self);
    double best = own;
    long best_idx = -1;
    for (Offset o : offsets(cfg.neighborhood)) {
        const long j = neighbour(n, r, c, o, cfg.boundary);
        if (j < 0) continue;
        const double s = score_of(static_cast<std::size_t>(j));
        if (s > best || (s == best && best_idx >= 0 && j < best_idx)) {
            best = s;
            best_idx = j;
        }
    }
    // the incumbent keeps its site when it ties the maximum
    if (best_idx < 0 || best == own) return cells[self];
    return cells[static_cast<std::size_t>(best_idx)];
}

Strategy probabilistic_winner(std::span<const Strategy> cells, std::span<const double> scores,
                              std::size_t n, std::size_t r, std::size_t c, const GameConfig& cfg,
                              double m, std::size_t generation, std::size_t& degenerate) {
    std::array<std::size_t, 9> cand{};
    std::size_t count = 0;
    cand[count++] = r * n + c;
    for (Offset o : offsets(cfg.neighborhood)) {
        const long j = neighbour(n, r, c, o, cfg.boundary);
        if (j >= 0) cand[count++] = static_cast<std::size_t>(j);
    }
    double top = 0.0;
    for (std::size_t i = 0; i < count; ++i) top = std::max(top, scores[cand[i]]);
    if (!(top > 0.0)) {
        ++degenerate;
        return cells[r * n + c];
    }
    std::array<double, 9> w{};
    double total = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        w[i] = std::pow(scores[cand[i]] / top, m);
        total += w[i];
    }
    const double u =
        runio::rng_value(cfg.seed, runio::GridKey{runio::Stream::GameProbabilistic, generation, r, c}) *
        total;
    double acc = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        acc += w[i];
        if (u < acc) return cells[cand[i]];
    }
    return cells[cand[count - 1]];
}

}  // namespace

void Payoffs::validate() const {
    if (!(b > 1.0) || !std::isfinite(b)) throw DomainError("temptation b must exceed 1");
    if (!(punishment >= 0.0 && punishment < 1.0))
        throw DomainError("punishment must lie in [0, 1)");
}

double Payoffs::payoff(Strategy self, Strategy other) const noexcept {
    if (self == Strategy::C) return other == Strategy::C ? 1.0 : 0.0;
    return other == Strategy::C ? b : punishment;
}

std::string_view to_string(Neighborhood n) noexcept {
    switch (n) {
        case Neighborhood::Moore8Self: return "moore8+self";
        case Neighborhood::Moore8: return "moore8";
        case Neighborhood::VonNeumann4: return "vonNeumann4";
    }
    return "moore8+self";
}

std::string_view to_string(BoundaryRule b) noexcept {
    return b == BoundaryRule::Fixed ? "fixed" : "periodic";
}

Neighborhood parse_neighborhood(std::string_view text) {
    if (text == "moore8+self") return Neighborhood::Moore8Self;
    if (text == "moore8") return Neighborhood::Moore8;
    if (text == "vonNeumann4" || text == "vonneumann4") return Neighborhood::VonNeumann4;
    throw DomainError("unknown neighborhood '" + std::string(text) + "'");
}

BoundaryRule parse_boundary_rule(std::string_view text) {
    if (text == "fixed") return BoundaryRule::Fixed;
    if (text == "periodic") return BoundaryRule::Periodic;
    throw DomainError("unknown boundary '" + std::string(text) + "'");
}

void GameConfig::validate() const {
    if (n < 3) throw DomainError("game lattice side must be at least 3");
    payoffs.validate();
    if (const auto* p = std::get_if<SyncProbabilistic>(&update); p && !(p->m > 0.0))
        throw DomainError("stiffness m must be positive");
    if (const auto* r = std::get_if<RandomInit>(&init);
        r && !(r->fraction_c >= 0.0 && r->fraction_c <= 1.0))
        throw DomainError("initial cooperator fraction must lie in [0, 1]");
    if (const auto* e = std::get_if<ExplicitBoard>(&init); e && e->cells.size() != n * n)
        throw DomainError("explicit board must be n x n");
}

Board::Board(std::size_t n, Strategy fill) : n_(n), cells_(n * n, fill), prev_(n * n, fill) {}

Board::Board(std::size_t n, std::vector<Strategy> cells)
    : n_(n), cells_(std::move(cells)), prev_(cells_) {
    if (cells_.size() != n * n) throw DomainError("board cells must be n x n");
}

std::size_t Board::count_c() const noexcept {
    return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), Strategy::C));
}

double Board::fraction_c() const noexcept {
    return cells_.empty() ? 0.0
                          : static_cast<double>(count_c()) / static_cast<double>(cells_.size());
}

void Board::advance_to(std::vector<Strategy> next) {
    if (next.size() != cells_.size()) throw DomainError("next grid has wrong size");
    prev_ = std::move(cells_);
    cells_ = std::move(next);
    ++generation_;
}

Board initial_board(const GameConfig& config) {
    config.validate();
    const std::size_t n = config.n;
    if (const auto* r = std::get_if<RandomInit>(&config.init)) {
        std::vector<Strategy> cells(n * n);
        for (std::size_t i = 0; i < n * n; ++i) {
            const double u = runio::rng_value(
                config.seed, runio::GridKey{runio::Stream::GameInit, 0, i / n, i % n});
            cells[i] = u < r->fraction_c ? Strategy::C : Strategy::D;
        }
        return Board(n, std::move(cells));
    }
    if (std::holds_alternative<SingleDefectorCenter>(config.init)) {
        std::vector<Strategy> cells(n * n, Strategy::C);
        cells[(n / 2) * n + n / 2] = Strategy::D;
        return Board(n, std::move(cells));
    }
    return Board(n, std::get<ExplicitBoard>(config.init).cells);
}

double score(const Board& board, std::size_t row, std::size_t col, const Payoffs& payoffs,
             Neighborhood neighborhood, BoundaryRule boundary) {
    const std::size_t n = board.side();
    if (row >= n || col >= n) throw DomainError("site out of range");
    return score_cells(board.cells(), n, row, col, payoffs, neighborhood, boundary);
}

Board step(const Board& board, const GameConfig& config, StepStats* stats) {
    const std::size_t n = board.side();
    if (n != config.n) throw DomainError("board side does not match config");
    const auto cells = board.cells();
    const std::size_t gen = board.generation();
    std::vector<Strategy> next(cells.size());

    if (std::holds_alternative<AsyncRandomOrder>(config.update)) {
        // logically sequential: each site sees the updates before it
        std::vector<Strategy> live(cells.begin(), cells.end());
        std::vector<std::size_t> order(live.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        for (std::size_t i = order.size(); i > 1; --i) {
            const double u = runio::rng_value(
                config.seed, runio::GridKey{runio::Stream::GameAsyncOrder, gen, i, 0});
            const auto j = std::min(static_cast<std::size_t>(u * static_cast<double>(i)), i - 1);
            std::swap(order[i - 1], order[j]);
        }
        for (std::size_t idx : order) {
            const std::size_t r = idx / n, c = idx % n;
            auto score_of = [&](std::size_t j) {
                return score_cells(live, n, j / n, j % n, config.payoffs, config.neighborhood,
                                   config.boundary);
            };
            live[idx] = deterministic_winner(live, n, r, c, config, score_of);
        }
        Board out = board;
        out.advance_to(std::move(live));
        return out;
    }

    std::vector<double> scores(cells.size());
    parallel::for_range(
        n,
        [&](std::size_t r0, std::size_t r1) {
            for (std::size_t r = r0; r < r1; ++r)
                for (std::size_t c = 0; c < n; ++c)
                    scores[r * n + c] = score_cells(cells, n, r, c, config.payoffs,
                                                    config.neighborhood, config.boundary);
        },
        64);

    std::size_t degenerate = 0;
    if (const auto* prob = std::get_if<SyncProbabilistic>(&config.update)) {
        std::vector<std::size_t> per_row(n, 0);
        parallel::for_range(
            n,
            [&](std::size_t r0, std::size_t r1) {
                for (std::size_t r = r0; r < r1; ++r)
                    for (std::size_t c = 0; c < n; ++c)
                        next[r * n + c] = probabilistic_winner(cells, scores, n, r, c, config,
                                                               prob->m, gen, per_row[r]);
            },
            64);
        for (auto d : per_row) degenerate += d;
    } else {
        parallel::for_range(
            n,
            [&](std::size_t r0, std::size_t r1) {
                for (std::size_t r = r0; r < r1; ++r)
                    for (std::size_t c = 0; c < n; ++c)
                        next[r * n + c] = deterministic_winner(
                            cells, n, r, c, config, [&](std::size_t j) { return scores[j]; });
            },
            64);
    }
    if (stats) stats->degenerate += degenerate;

    Board out = board;
    out.advance_to(std::move(next));
    return out;
}

GameRun run(const GameConfig& config, const RunOptions& options) {
    GameRun result;
    Board board = initial_board(config);
    result.fc.reserve(config.generations + 1);
    result.fc.push_back(board.fraction_c());
    if (options.frames_every > 0) result.frames.push_back(board);
    StepStats stats;
    for (std::size_t g = 0; g < config.generations; ++g) {
        board = step(board, config, &stats);
        result.fc.push_back(board.fraction_c());
        if (options.frames_every > 0 && board.generation() % options.frames_every == 0)
            result.frames.push_back(board);
    }
    result.degenerate = stats.degenerate;
    result.final_board = std::move(board);
    return result;
}

double fc_theory() noexcept { return 12.0 * std::numbers::ln2 - 8.0; }

bool has_dihedral_symmetry(const Board& board) noexcept {
    const std::size_t n = board.side();
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
            const Strategy s = board.at(r, c);
            // transpose and the two mirror flips generate the whole group
            if (s != board.at(c, r) || s != board.at(n - 1 - r, c) || s != board.at(r, n - 1 - c))
                return false;
        }
    }
    return true;
}

std::vector<std::size_t> local_minima(std::span<const double> fc) {
    std::vector<std::size_t> out;
    for (std::size_t t = 1; t + 1 < fc.size(); ++t)
        if (fc[t] < fc[t - 1] && fc[t] < fc[t + 1]) out.push_back(t);
    return out;
}

std::string_view to_string(ClusterVerdict v) noexcept {
    switch (v) {
        case ClusterVerdict::Grows: return "grows";
        case ClusterVerdict::Shrinks: return "shrinks";
        case ClusterVerdict::Static: return "static";
    }
    return "static";
}

ClusterResult cluster_experiment(double b, ClusterKind kind, std::size_t k,
                                 std::size_t generations, const GameConfig& tmpl) {
    if (k < 1) throw DomainError("cluster side must be at least 1");
    GameConfig cfg = tmpl;
    cfg.payoffs.b = b;
    cfg.update = SyncDeterministic{};
    cfg.n = 2 * k + 4 * generations + 1;
    cfg.generations = generations;

    const Strategy minority = kind == ClusterKind::DBlock ? Strategy::D : Strategy::C;
    const Strategy sea = kind == ClusterKind::DBlock ? Strategy::C : Strategy::D;
    const std::size_t n = cfg.n;
    std::vector<Strategy> cells(n * n, sea);
    const std::size_t origin = (n - k) / 2;
    for (std::size_t r = origin; r < origin + k; ++r)
        for (std::size_t c = origin; c < origin + k; ++c) cells[r * n + c] = minority;
    cfg.init = ExplicitBoard{cells};
    cfg.validate();

    auto count_minority = [&](const Board& bd) {
        const std::size_t c = bd.count_c();
        return minority == Strategy::C ? c : n * n - c;
    };
    auto touches_boundary = [&](const Board& bd) {
        for (std::size_t i = 0; i < n; ++i)
            if (bd.at(0, i) == minority || bd.at(n - 1, i) == minority ||
                bd.at(i, 0) == minority || bd.at(i, n - 1) == minority)
                return true;
        return false;
    };

    ClusterResult res;
    res.n = n;
    Board board(n, std::move(cells));
    res.minority_counts.push_back(count_minority(board));
    for (std::size_t g = 0; g < generations; ++g) {
        board = step(board, cfg);
        if (touches_boundary(board))
            throw DomainError("cluster reached the boundary at generation " +
                              std::to_string(board.generation()));
        res.minority_counts.push_back(count_minority(board));
    }
    const double initial = static_cast<double>(res.minority_counts.front());
    const double final_count = static_cast<double>(res.minority_counts.back());
    if (final_count > 1.5 * initial)
        res.verdict = ClusterVerdict::Grows;
    else if (final_count < 0.5 * initial)
        res.verdict = ClusterVerdict::Shrinks;
    else
        res.verdict = ClusterVerdict::Static;
    return res;
}

runio::Frame render_frame(const Board& board) {
    const std::size_t n = board.side();
    std::vector<std::uint8_t> now(n * n), before(n * n);
    for (std::size_t i = 0; i < n * n; ++i) {
        now[i] = board.cells()[i] == Strategy::C;
        before[i] = board.previous()[i] == Strategy::C;
    }
    return runio::render_game(now, before, static_cast<int>(n), static_cast<int>(n));
}

}  // namespace chaoslab::games
