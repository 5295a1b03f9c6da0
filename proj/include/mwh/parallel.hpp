#pragma once

#include <atomic>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace mwh {

/// Worker count: explicit argument > MWLAB_THREADS > hardware concurrency.
inline int default_threads() {
    if (const char* env = std::getenv("MWLAB_THREADS")) {
        int n = std::atoi(env);
        if (n > 0) return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? int(hw) : 1;
}

/// Runs fn(i) for i in [0, n). Each task writes only its own slot, so results
/// are identical for any worker count.
inline void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& fn, int threads = 0) {
    if (threads <= 0) threads = default_threads();
    if (threads == 1 || n <= 1) {
        for (std::int64_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::int64_t> counter{0};
    auto worker = [&]() {
        while (true) {
            std::int64_t i = counter.fetch_add(1);
            if (i >= n) break;
            fn(i);
        }
    };
    std::vector<std::thread> pool;
    int k = int(std::min<std::int64_t>(threads, n));
    pool.reserve(k);
    for (int t = 0; t < k; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
}

}  // namespace mwh
