#pragma once

#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace ppde {

// Worker-pool loop over [0, n): each index is handled exactly once and
// writes only its own slots, so results do not depend on scheduling.
inline void parallel_for(std::size_t n, int threads,
                         const std::function<void(std::size_t)>& fn) {
    if (threads <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += workers) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

inline int default_threads() {
    if (const char* env = std::getenv("PPDE_LAB_THREADS")) {
        int v = std::atoi(env);
        if (v > 0) return v;
    }
    return 1;
}

}  // namespace ppde
