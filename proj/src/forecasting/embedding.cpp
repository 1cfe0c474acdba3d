#include <algorithm>
#include <cmath>
#include <numeric>

#include "chaoslab/error.hpp"
#include "chaoslab/forecasting.hpp"

namespace chaoslab::forecast {

void Series::validate() const {
    if (values.size() < 2) throw DomainError("series needs at least 2 values");
    for (std::size_t i = 0; i < values.size(); ++i)
        if (!std::isfinite(values[i]))
            throw DomainError("series value " + std::to_string(i) + " is not finite");
}

std::string_view to_string(Protocol p) noexcept {
    switch (p) {
        case Protocol::HalfSplitForward: return "half-split-forward";
        case Protocol::HalfSplitBackward: return "half-split-backward";
        case Protocol::FullWithExclusion: return "full-with-exclusion";
    }
    return "unknown";
}

Protocol parse_protocol(std::string_view text) {
    if (text == "half-split-forward") return Protocol::HalfSplitForward;
    if (text == "half-split-backward") return Protocol::HalfSplitBackward;
    if (text == "full-with-exclusion") return Protocol::FullWithExclusion;
    throw DomainError("unknown protocol '" + std::string(text) + "'");
}

void EmbeddingConfig::validate() const {
    if (E < 1) throw DomainError("embedding dimension E must be at least 1");
    if (tau < 1) throw DomainError("lag tau must be at least 1");
}

std::vector<double> delay_vector(std::span<const double> data, std::size_t t, std::size_t E,
                                 std::size_t tau) {
    if (E < 1 || tau < 1) throw DomainError("E and tau must be at least 1");
    if (t >= data.size() || t < (E - 1) * tau)
        throw DomainError("time index " + std::to_string(t) + " has no full delay vector");
    std::vector<double> v(E);
    for (std::size_t j = 0; j < E; ++j) v[j] = data[t - j * tau];
    return v;
}

Library::Library(std::shared_ptr<const std::vector<double>> data, std::size_t E, std::size_t tau,
                 std::size_t segment_begin, std::size_t segment_end,
                 std::vector<std::size_t> times)
    : data_(std::move(data)), E_(E), tau_(tau), begin_(segment_begin), end_(segment_end),
      times_(std::move(times)) {
    if (!data_) throw DomainError("library needs a series");
    if (E_ < 1 || tau_ < 1) throw DomainError("E and tau must be at least 1");
    if (begin_ >= end_ || end_ > data_->size()) throw DomainError("invalid library segment");
    coords_.resize(times_.size() * E_);
    const auto& x = *data_;
    for (std::size_t i = 0; i < times_.size(); ++i) {
        const std::size_t t = times_[i];
        if (t >= end_ || t < begin_ + (E_ - 1) * tau_)
            throw DomainError("library time " + std::to_string(t) + " outside its segment");
        for (std::size_t j = 0; j < E_; ++j) coords_[i * E_ + j] = x[t - j * tau_];
    }
}

Library embed_segment(std::shared_ptr<const std::vector<double>> data, std::size_t E,
                      std::size_t tau, std::size_t begin, std::size_t end) {
    if (E < 1 || tau < 1) throw DomainError("E and tau must be at least 1");
    if (!data || end > data->size() || begin >= end) throw DomainError("invalid segment");
    const std::size_t span = (E - 1) * tau;
    if (end - begin <= span + 1)
        throw DomainError("series too short: " + std::to_string(end - begin) +
                          " values for E=" + std::to_string(E) + ", tau=" + std::to_string(tau));
    std::vector<std::size_t> times(end - begin - span);
    std::iota(times.begin(), times.end(), begin + span);
    return Library(std::move(data), E, tau, begin, end, std::move(times));
}

Library embed(const Series& series, std::size_t E, std::size_t tau) {
    series.validate();
    auto data = std::make_shared<const std::vector<double>>(series.values);
    return embed_segment(std::move(data), E, tau, 0, series.values.size());
}

}  // namespace chaoslab::forecast
