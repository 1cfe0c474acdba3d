#include "chaoslab/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace chaoslab::parallel {

namespace {
std::atomic<unsigned> g_override{0};
}

unsigned thread_count() {
    if (unsigned o = g_override.load(); o != 0) return o;
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("CHAOSLAB_THREADS")) {
        try {
            unsigned long v = std::stoul(env);
            if (v > 0) return static_cast<unsigned>(std::min<unsigned long>(v, 1024));
        } catch (const std::exception&) {
            // unparsable values fall back to auto
        }
    }
    return hw;
}

void set_thread_override(unsigned threads) { g_override.store(threads); }

void for_range(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body,
               std::size_t min_parallel) {
    if (n == 0) return;
    const std::size_t workers = std::min<std::size_t>(thread_count(), n);
    if (workers <= 1 || n < min_parallel) {
        body(0, n);
        return;
    }
    const std::size_t chunk = (n + workers - 1) / workers;
    std::vector<std::exception_ptr> errors(workers);
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers - 1);
        for (std::size_t w = 1; w < workers; ++w) {
            const std::size_t lo = w * chunk;
            const std::size_t hi = std::min(n, lo + chunk);
            if (lo >= hi) break;
            pool.emplace_back([&body, &errors, w, lo, hi] {
                try {
                    body(lo, hi);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        try {
            body(0, std::min(n, chunk));
        } catch (...) {
            errors[0] = std::current_exception();
        }
    }
    // lowest chunk wins so the reported failure does not depend on timing
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace chaoslab::parallel
