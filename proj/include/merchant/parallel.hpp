#pragma once

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <thread>
#include <vector>

namespace merchant {

// Worker threads for Monte Carlo batches. Reads the optional MERCHANT_THREADS
// override (the only environment variable this library consults).
inline int default_thread_count() {
    if (const char* env = std::getenv("MERCHANT_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1 && v <= 1024) return static_cast<int>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

inline constexpr std::int64_t kDefaultBatchSize = 8192;

// Runs `body(batch_first, batch_last_exclusive)` over [0, total) split into
// fixed-size batches and merges the per-batch partials in batch order.
// The partition does not depend on the thread count, so the merged result is
// identical no matter how many workers run or how they are scheduled.
template <class Partial, class Body>
Partial run_batches(std::int64_t total, Body body, int threads = 0,
                    std::int64_t batch_size = kDefaultBatchSize) {
    if (total <= 0) return Partial{};
    if (threads <= 0) threads = default_thread_count();
    const std::int64_t n_batches = (total + batch_size - 1) / batch_size;
    std::vector<Partial> partials(static_cast<std::size_t>(n_batches));

    std::atomic<std::int64_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::int64_t b = next.fetch_add(1);
            if (b >= n_batches) return;
            const std::int64_t first = b * batch_size;
            const std::int64_t last = std::min(total, first + batch_size);
            partials[static_cast<std::size_t>(b)] = body(first, last);
        }
    };

    const int n_threads = static_cast<int>(std::min<std::int64_t>(threads, n_batches));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_threads));
        for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    Partial out{};
    for (const auto& p : partials) out.merge(p);
    return out;
}

}  // namespace merchant
