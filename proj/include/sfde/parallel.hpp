#pragma once

#include <functional>
#include <thread>
#include <vector>

namespace sfde {

// Static block partition over [0, n).  Workers write to disjoint slots only;
// any reduction happens afterwards in index order, so results do not depend
// on the worker count.
inline void parallel_for(long n, int threads, const std::function<void(long)>& body) {
    if (n <= 0) return;
    if (threads < 1) threads = 1;
    threads = static_cast<int>(std::min<long>(threads, n));
    if (threads == 1) {
        for (long i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(threads));
    const long chunk = (n + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        const long lo = t * chunk;
        const long hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &body] {
            for (long i = lo; i < hi; ++i) body(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace sfde
