#pragma once

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace dynlab {

/// Resolve a thread budget: explicit request > DYNLAB_THREADS env > hardware.
inline int resolve_threads(int requested = 0) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("DYNLAB_THREADS")) {
        int n = std::atoi(env);
        if (n > 0) return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

/// Run fn(i) for i in [0, n). Results must be written to per-index slots by
/// the caller; the chunking is static, so output is independent of the
/// thread budget.
template <typename Fn>
void parallel_for(long n, int threads, Fn&& fn) {
    if (n <= 0) return;
    threads = resolve_threads(threads);
    if (threads <= 1 || n < 2 * threads) {
        for (long i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    const long chunk = (n + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        const long lo = t * chunk;
        const long hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (long i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

} // namespace dynlab
