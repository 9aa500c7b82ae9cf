#pragma once

#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace benchhedge {

// Runs fn(begin, end) over contiguous chunks of [0, n). Workers write to
// disjoint preallocated slots only, so the result is identical for any thread
// count; all reductions happen afterwards in a fixed serial order.
inline void parallel_for(std::size_t n, unsigned n_threads,
                         const std::function<void(std::size_t, std::size_t)>& fn) {
    if (n == 0) return;
    if (n_threads == 0) n_threads = std::thread::hardware_concurrency();
    if (n_threads <= 1 || n < 2) {
        fn(0, n);
        return;
    }
    const std::size_t workers = std::min<std::size_t>(n_threads, n);
    const std::size_t chunk = (n + workers - 1) / workers;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&fn, begin, end] { fn(begin, end); });
    }
    for (auto& t : pool) t.join();
}

// Global worker cap used by the CLI --threads flag; 0 means hardware default.
unsigned& worker_threads();

}  // namespace benchhedge
