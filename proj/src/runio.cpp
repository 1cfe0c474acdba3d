#include "chaoslab/runio.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "chaoslab/error.hpp"

namespace chaoslab::runio {

namespace {

constexpr std::uint64_t kGridTag = 0x47524944ULL;
constexpr std::uint64_t kCounterTag = 0x43545231ULL;

std::uint64_t chain(std::uint64_t seed, std::uint64_t tag,
                    std::initializer_list<std::uint64_t> words) noexcept {
    std::uint64_t h = mix64(mix64(seed) ^ tag);
    for (std::uint64_t w : words) h = mix64(h ^ w);
    return h;
}

double to_unit(std::uint64_t bits) noexcept {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(sep, start);
        out.push_back(trim(line.substr(start, pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::vector<std::string_view> lines_of(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t pos = text.find('\n', start);
        if (pos == std::string_view::npos) pos = text.size();
        auto line = trim(text.substr(start, pos - start));
        if (!line.empty()) out.push_back(line);
        start = pos + 1;
    }
    return out;
}

bool try_parse(std::string_view text, double& out) {
    try {
        out = parse_double(text);
        return true;
    } catch (const DomainError&) {
        return false;
    }
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void dump(const std::filesystem::path& path, std::string_view bytes) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

std::uint8_t ramp(double ratio, double decades, int lo, int hi) noexcept {
    double t = (std::log10(ratio) + decades) / (2.0 * decades);
    if (!(t > 0.0)) t = 0.0;  // also catches NaN
    if (t > 1.0) t = 1.0;
    return static_cast<std::uint8_t>(lo + std::lround(t * (hi - lo)));
}

}  // namespace

std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t rng_bits(std::uint64_t seed, const GridKey& key) noexcept {
    return chain(seed, kGridTag,
                 {static_cast<std::uint64_t>(key.stream), key.generation, key.x, key.y});
}

std::uint64_t rng_bits(std::uint64_t seed, const CounterKey& key) noexcept {
    return chain(seed, kCounterTag, {static_cast<std::uint64_t>(key.stream), key.counter});
}

double rng_value(std::uint64_t seed, const GridKey& key) noexcept {
    return to_unit(rng_bits(seed, key));
}

double rng_value(std::uint64_t seed, const CounterKey& key) noexcept {
    return to_unit(rng_bits(seed, key));
}

std::uint64_t CounterStream::next_below(std::uint64_t bound) noexcept {
    // exact for bound < 2^53
    const auto v = static_cast<std::uint64_t>(next() * static_cast<double>(bound));
    return v < bound ? v : bound - 1;
}

double CounterStream::next_normal() noexcept {
    const double u1 = 1.0 - next();  // (0, 1]
    const double u2 = next();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// ---------------------------------------------------------------------------

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
    text = trim(text);
    if (text == "nan" || text == "NaN") return std::numeric_limits<double>::quiet_NaN();
    if (text == "inf") return std::numeric_limits<double>::infinity();
    if (text == "-inf") return -std::numeric_limits<double>::infinity();
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    double v = 0.0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || res.ec != std::errc{} || res.ptr != text.data() + text.size())
        throw DomainError("not a number: '" + std::string(text) + "'");
    return v;
}

std::string to_csv(const CsvTable& table) {
    std::string out;
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
        if (i) out += ',';
        out += table.columns[i];
    }
    out += '\n';
    for (const auto& row : table.rows) {
        if (row.size() != table.columns.size())
            throw DomainError("csv row width does not match header");
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += format_double(row[i]);
        }
        out += '\n';
    }
    return out;
}

CsvTable parse_csv(std::string_view text) {
    auto lines = lines_of(text);
    if (lines.empty()) throw DomainError("empty csv");
    CsvTable table;
    for (auto c : split(lines.front(), ',')) table.columns.emplace_back(c);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        auto cells = split(lines[i], ',');
        if (cells.size() != table.columns.size())
            throw DomainError("csv line " + std::to_string(i + 1) + " has wrong width");
        std::vector<double> row;
        row.reserve(cells.size());
        for (auto c : cells) row.push_back(parse_double(c));
        table.rows.push_back(std::move(row));
    }
    return table;
}

void write_csv(const CsvTable& table, const std::filesystem::path& path) {
    dump(path, to_csv(table));
}

CsvTable read_csv(const std::filesystem::path& path) { return parse_csv(slurp(path)); }

std::vector<double> parse_series_csv(std::string_view text) {
    auto lines = lines_of(text);
    std::vector<double> values;
    values.reserve(lines.size());
    for (std::size_t i = 0; i < lines.size(); ++i) {
        auto cells = split(lines[i], ',');
        double v = 0.0;
        if (!try_parse(cells.front(), v)) {
            if (i == 0) continue;  // header
            throw DomainError("series line " + std::to_string(i + 1) + " is not numeric");
        }
        values.push_back(v);
    }
    return values;
}

std::vector<double> read_series_csv(const std::filesystem::path& path) {
    return parse_series_csv(slurp(path));
}

// ---------------------------------------------------------------------------

nlohmann::json make_report(std::string_view command, const nlohmann::json& config,
                           std::uint64_t seed, const nlohmann::json& results) {
    return nlohmann::json{
        {"format_version", kReportFormatVersion},
        {"artifact_version", std::string(kArtifactVersion)},
        {"command", std::string(command)},
        {"seed", seed},
        {"config", config},
        {"results", results},
    };
}

void write_report(const nlohmann::json& report, const std::filesystem::path& path) {
    dump(path, report.dump(2) + "\n");
}

nlohmann::json read_report(const std::filesystem::path& path) {
    return nlohmann::json::parse(slurp(path));
}

// ---------------------------------------------------------------------------

Frame Frame::gray(int width, int height) {
    if (width <= 0 || height <= 0) throw DomainError("frame dimensions must be positive");
    return Frame{width, height, 1,
                 std::vector<std::uint8_t>(static_cast<std::size_t>(width) * height, 0)};
}

Frame Frame::rgb(int width, int height) {
    if (width <= 0 || height <= 0) throw DomainError("frame dimensions must be positive");
    return Frame{width, height, 3,
                 std::vector<std::uint8_t>(static_cast<std::size_t>(width) * height * 3, 0)};
}

bool Frame::valid() const noexcept {
    return width > 0 && height > 0 && (channels == 1 || channels == 3) &&
           pixels.size() == static_cast<std::size_t>(width) * height * channels;
}

std::vector<std::uint8_t> encode_frame(const Frame& frame, FrameFormat format) {
    if (!frame.valid()) throw DomainError("invalid frame");
    const int want = format == FrameFormat::Pgm ? 1 : 3;
    if (frame.channels != want) throw DomainError("frame channels do not match format");
    std::string header = (format == FrameFormat::Pgm ? "P5\n" : "P6\n") +
                         std::to_string(frame.width) + " " + std::to_string(frame.height) +
                         "\n255\n";
    std::vector<std::uint8_t> bytes(header.begin(), header.end());
    bytes.insert(bytes.end(), frame.pixels.begin(), frame.pixels.end());
    return bytes;
}

void write_frame(const Frame& frame, const std::filesystem::path& path, FrameFormat format) {
    auto bytes = encode_frame(frame, format);
    dump(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

Rgb game_color(bool cooperator_now, bool cooperator_before) noexcept {
    if (cooperator_now) return cooperator_before ? Rgb{0, 0, 255} : Rgb{0, 255, 0};
    return cooperator_before ? Rgb{255, 255, 0} : Rgb{255, 0, 0};
}

Frame render_game(std::span<const std::uint8_t> current, std::span<const std::uint8_t> previous,
                  int width, int height) {
    Frame f = Frame::rgb(width, height);
    const std::size_t cells = static_cast<std::size_t>(width) * height;
    if (current.size() != cells || previous.size() != cells)
        throw DomainError("game grid does not match frame size");
    for (std::size_t i = 0; i < cells; ++i) {
        Rgb c = game_color(current[i] != 0, previous[i] != 0);
        f.pixels[3 * i] = c.r;
        f.pixels[3 * i + 1] = c.g;
        f.pixels[3 * i + 2] = c.b;
    }
    return f;
}

std::uint8_t LatticePalette::shade(double h, double p) const noexcept {
    if (!(h >= empty_fraction * h_star)) return 0;
    if (!(p >= parasitoid_fraction * p_star)) return ramp(h / h_star, decades, 64, 176);
    return ramp(p / p_star, decades, 192, 255);
}

Frame render_lattice(std::span<const double> hosts, std::span<const double> parasitoids, int n,
                     const LatticePalette& palette) {
    Frame f = Frame::gray(n, n);
    if (hosts.size() != f.pixels.size() || parasitoids.size() != f.pixels.size())
        throw DomainError("lattice grid does not match frame size");
    for (std::size_t i = 0; i < f.pixels.size(); ++i)
        f.pixels[i] = palette.shade(hosts[i], parasitoids[i]);
    return f;
}

}  // namespace chaoslab::runio
