#pragma once

// Spatial Prisoner's Dilemma between memoryless cooperators (C) and
// defectors (D) on an n x n lattice. Each generation every site plays its
// neighbourhood, then is taken over by the highest scorer among itself and
// its neighbours.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "chaoslab/runio.hpp"

namespace chaoslab::games {

enum class Strategy : std::uint8_t { D = 0, C = 1 };

// R = 1, T = b, S = 0, P = punishment.
struct Payoffs {
    double b = 1.9;
    double punishment = 0.0;

    void validate() const;
    double payoff(Strategy self, Strategy other) const noexcept;
};

enum class Neighborhood { Moore8Self, Moore8, VonNeumann4 };
enum class BoundaryRule { Fixed, Periodic };

std::string_view to_string(Neighborhood n) noexcept;
std::string_view to_string(BoundaryRule b) noexcept;
Neighborhood parse_neighborhood(std::string_view text);
BoundaryRule parse_boundary_rule(std::string_view text);

struct SyncDeterministic {};
// Site adopts candidate i's strategy with probability s_i^m / sum_j s_j^m.
struct SyncProbabilistic {
    double m = 8.0;
};
// Sites updated one at a time in a fresh random order each sweep.
struct AsyncRandomOrder {};

using UpdateRule = std::variant<SyncDeterministic, SyncProbabilistic, AsyncRandomOrder>;

struct RandomInit {
    double fraction_c = 0.6;
};
struct SingleDefectorCenter {};
struct ExplicitBoard {
    std::vector<Strategy> cells;
};

using GameInit = std::variant<RandomInit, SingleDefectorCenter, ExplicitBoard>;

struct GameConfig {
    std::size_t n = 400;
    Payoffs payoffs;
    Neighborhood neighborhood = Neighborhood::Moore8Self;
    BoundaryRule boundary = BoundaryRule::Fixed;
    UpdateRule update = SyncDeterministic{};
    std::size_t generations = 300;
    GameInit init = RandomInit{};
    std::uint64_t seed = 1;

    void validate() const;
};

class Board {
public:
    Board() = default;
    Board(std::size_t n, Strategy fill);
    Board(std::size_t n, std::vector<Strategy> cells);

    std::size_t side() const noexcept { return n_; }
    std::size_t generation() const noexcept { return generation_; }
    Strategy at(std::size_t row, std::size_t col) const { return cells_[row * n_ + col]; }
    Strategy prev_at(std::size_t row, std::size_t col) const { return prev_[row * n_ + col]; }
    void set(std::size_t row, std::size_t col, Strategy s) { cells_[row * n_ + col] = s; }

    std::span<const Strategy> cells() const noexcept { return cells_; }
    std::span<const Strategy> previous() const noexcept { return prev_; }

    std::size_t count_c() const noexcept;
    double fraction_c() const noexcept;

    // Installs `next` as the current grid; the current grid becomes prev.
    void advance_to(std::vector<Strategy> next);

    friend bool operator==(const Board&, const Board&) = default;

private:
    std::size_t n_ = 0;
    std::size_t generation_ = 0;
    std::vector<Strategy> cells_;
    std::vector<Strategy> prev_;
};

Board initial_board(const GameConfig& config);

// Row-player payoff summed over the neighbour set; Moore8Self includes the
// site playing itself. Fixed boundaries truncate the set.
double score(const Board& board, std::size_t row, std::size_t col, const Payoffs& payoffs,
             Neighborhood neighborhood, BoundaryRule boundary);

struct StepStats {
    std::size_t degenerate = 0;  // probabilistic sites with all-zero scores
};

// Applies one generation of config.update. Randomness is keyed by
// (config.seed, generation, row, col), so results do not depend on threads.
Board step(const Board& board, const GameConfig& config, StepStats* stats = nullptr);

struct RunOptions {
    std::size_t frames_every = 0;  // 0 = none; frames include generation 0
};

struct GameRun {
    std::vector<double> fc;  // generation 0..generations
    Board final_board;
    std::vector<Board> frames;
    std::size_t degenerate = 0;
};

GameRun run(const GameConfig& config, const RunOptions& options = {});

// RGB frame colouring each site by its current and previous strategy.
runio::Frame render_frame(const Board& board);

// 12 ln 2 - 8
double fc_theory() noexcept;

// True when the board is invariant under all eight symmetries of the square.
bool has_dihedral_symmetry(const Board& board) noexcept;

// Generations t in (0, last) with fc[t] below both neighbours.
std::vector<std::size_t> local_minima(std::span<const double> fc);

enum class ClusterKind { DBlock, CBlock };
enum class ClusterVerdict { Grows, Shrinks, Static };

std::string_view to_string(ClusterVerdict v) noexcept;

struct ClusterResult {
    ClusterVerdict verdict = ClusterVerdict::Static;
    std::vector<std::size_t> minority_counts;  // generation 0..generations
    std::size_t n = 0;
};

// A k x k block of the minority strategy centred in a sea of the other,
// evolved with sync-deterministic steps. Grows if the final minority count
// exceeds 1.5x the initial one, shrinks below 0.5x. The lattice side is
// 2k + 4*generations + 1; tmpl supplies payoffs, neighbourhood and boundary.
// Throws if the minority ever reaches the boundary.
ClusterResult cluster_experiment(double b, ClusterKind kind, std::size_t k,
                                 std::size_t generations, const GameConfig& tmpl = {});

}  // namespace chaoslab::games
