#pragma once

#include <cstddef>
#include <functional>

namespace chaoslab::parallel {

// Effective worker count. Reads CHAOSLAB_THREADS (0 or unset = hardware
// concurrency) unless an override is installed.
unsigned thread_count();

// Overrides the environment for the current process; 0 clears the override.
void set_thread_override(unsigned threads);

// Calls body(begin, end) over a partition of [0, n) into contiguous chunks.
// Chunks never overlap, so bodies writing only to their own indices give
// results independent of the partition. Runs inline below min_parallel.
void for_range(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body,
               std::size_t min_parallel = 4096);

}  // namespace chaoslab::parallel
