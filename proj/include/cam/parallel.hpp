#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace cam {

// Runs fn(i) for i in [0, n) across hardware threads. Results must be written
// to pre-sized slots so the merge is independent of scheduling.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    if (n == 0) return;
    std::size_t workers = std::thread::hardware_concurrency();
    if (workers == 0) workers = 1;
    if (workers > n) workers = n;
    if (workers <= 1 || n < 32) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += workers) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace cam
