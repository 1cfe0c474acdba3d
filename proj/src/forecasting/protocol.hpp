#pragma once

#include <algorithm>
#include <cstddef>

#include "chaoslab/forecasting.hpp"

namespace chaoslab::forecast::detail {

// Library segment and predictee segment for a protocol on a series of
// length n. Predictees and their targets both stay inside the predictee
// segment; delay coordinates may reach back into the other half.
struct Plan {
    std::size_t library_begin;
    std::size_t library_end;
    std::size_t predictee_begin;
    std::size_t predictee_end;
};

inline Plan plan_for(Protocol protocol, std::size_t n) {
    const std::size_t half = n / 2;
    switch (protocol) {
        case Protocol::HalfSplitForward: return {0, half, half, n};
        case Protocol::HalfSplitBackward: return {half, n, 0, half};
        case Protocol::FullWithExclusion: return {0, n, 0, n};
    }
    return {0, n, 0, n};
}

// First predictee index that has a full delay vector.
inline std::size_t first_predictee(const Plan& plan, std::size_t E, std::size_t tau) {
    return std::max(plan.predictee_begin, (E - 1) * tau);
}

}  // namespace chaoslab::forecast::detail
