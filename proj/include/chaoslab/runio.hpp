#pragma once

// Shared run I/O: the counter-based random stream, CSV tables, JSON reports
// and binary PGM/PPM frames with the lattice and game palettes.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace chaoslab::runio {

inline constexpr int kReportFormatVersion = 1;
inline constexpr std::string_view kArtifactVersion = "0.3.0";

// ---------------------------------------------------------------------------
// Counter-based RNG
//
// A value is a pure function of (seed, key): there is no generator state to
// share between threads. The construction is SplitMix64's finaliser chained
// over the key words:
//
//   h = mix64(seed); h = mix64(h ^ tag); for w in key: h = mix64(h ^ w)
//   value = (h >> 11) * 2^-53
//
// with tag 0x47524944 ("GRID") for grid keys and 0x43545231 ("CTR1") for
// counter keys. Test vectors are pinned in tests/unit/test_runio.cpp.
// ---------------------------------------------------------------------------

enum class Stream : std::uint64_t {
    LatticeInit = 1,
    GameInit = 2,
    GameProbabilistic = 3,
    GameAsyncOrder = 4,
    Synthetic = 5,
    Aggregate = 6,
};

struct GridKey {
    Stream stream;
    std::uint64_t generation;
    std::uint64_t x;
    std::uint64_t y;
};

struct CounterKey {
    Stream stream;
    std::uint64_t counter;
};

std::uint64_t mix64(std::uint64_t z) noexcept;

std::uint64_t rng_bits(std::uint64_t seed, const GridKey& key) noexcept;
std::uint64_t rng_bits(std::uint64_t seed, const CounterKey& key) noexcept;

// Uniform on [0, 1) with 53-bit resolution.
double rng_value(std::uint64_t seed, const GridKey& key) noexcept;
double rng_value(std::uint64_t seed, const CounterKey& key) noexcept;

// Sequential view over one counter stream; draw i is rng_value(seed, {stream, i}).
class CounterStream {
public:
    CounterStream(std::uint64_t seed, Stream stream, std::uint64_t start = 0)
        : seed_(seed), stream_(stream), counter_(start) {}

    double next() noexcept { return rng_value(seed_, CounterKey{stream_, counter_++}); }
    // Uniform integer in [0, bound); bound must be positive.
    std::uint64_t next_below(std::uint64_t bound) noexcept;
    // Standard normal via Box-Muller on two consecutive draws.
    double next_normal() noexcept;

    std::uint64_t counter() const noexcept { return counter_; }

private:
    std::uint64_t seed_;
    Stream stream_;
    std::uint64_t counter_;
};

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

// Shortest representation that parses back to the same double;
// "nan", "inf", "-inf" for non-finite values.
std::string format_double(double v);
double parse_double(std::string_view text);

std::string to_csv(const CsvTable& table);
CsvTable parse_csv(std::string_view text);

void write_csv(const CsvTable& table, const std::filesystem::path& path);
CsvTable read_csv(const std::filesystem::path& path);

// Single-column numeric file; a non-numeric first line is taken as a header.
std::vector<double> read_series_csv(const std::filesystem::path& path);
std::vector<double> parse_series_csv(std::string_view text);

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

// {format_version, artifact_version, command, seed, config, results}
nlohmann::json make_report(std::string_view command, const nlohmann::json& config,
                           std::uint64_t seed, const nlohmann::json& results);
void write_report(const nlohmann::json& report, const std::filesystem::path& path);
nlohmann::json read_report(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Frames
// ---------------------------------------------------------------------------

enum class FrameFormat { Pgm, Ppm };

struct Frame {
    int width = 0;
    int height = 0;
    int channels = 1;  // 1 = grayscale, 3 = RGB
    std::vector<std::uint8_t> pixels;

    static Frame gray(int width, int height);
    static Frame rgb(int width, int height);
    bool valid() const noexcept;
};

struct Rgb {
    std::uint8_t r, g, b;
    friend bool operator==(const Rgb&, const Rgb&) = default;
};

// Exact header ("P5\n<w> <h>\n255\n" or "P6\n...") followed by the payload.
std::vector<std::uint8_t> encode_frame(const Frame& frame, FrameFormat format);
void write_frame(const Frame& frame, const std::filesystem::path& path, FrameFormat format);

// Game palette: blue C after C, red D after D, green C after D, yellow D after C.
Rgb game_color(bool cooperator_now, bool cooperator_before) noexcept;

// Cell values are 1 for C and 0 for D, row-major.
Frame render_game(std::span<const std::uint8_t> current, std::span<const std::uint8_t> previous,
                  int width, int height);

// Lattice shading. Patches with H below empty_fraction*H* are black. Hosts
// without parasitoids (P below parasitoid_fraction*P*) shade 64..176 with
// log10(H/H*); patches with parasitoids shade 192..255 with log10(P/P*).
// Both ramps span +-decades around equilibrium and clip outside it.
struct LatticePalette {
    double h_star = 1.0;
    double p_star = 1.0;
    double empty_fraction = 1e-6;
    double parasitoid_fraction = 1e-3;
    double decades = 3.0;

    std::uint8_t shade(double h, double p) const noexcept;
};

Frame render_lattice(std::span<const double> hosts, std::span<const double> parasitoids, int n,
                     const LatticePalette& palette);

}  // namespace chaoslab::runio
