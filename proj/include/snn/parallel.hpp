#pragma once

#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <thread>
#include <vector>

namespace snn {

/// Worker count for data-parallel loops. Override with SNN_THREADS or
/// set_thread_count(); defaults to the hardware concurrency.
inline std::size_t& thread_count_ref() {
    static std::size_t n = [] {
        if (const char* env = std::getenv("SNN_THREADS")) {
            long v = std::atol(env);
            if (v > 0) return static_cast<std::size_t>(v);
        }
        unsigned hc = std::thread::hardware_concurrency();
        return static_cast<std::size_t>(hc > 0 ? hc : 1);
    }();
    return n;
}

inline std::size_t thread_count() { return thread_count_ref(); }
inline void set_thread_count(std::size_t n) { thread_count_ref() = n > 0 ? n : 1; }

/// Run fn(chunk_index, begin, end) over [0,n) split into fixed-size chunks.
/// Chunk boundaries depend only on (n, chunk_size), never on the number of
/// workers, so per-chunk partial results are reduction-order stable.
template <typename Fn>
void parallel_for_chunks(std::size_t n, std::size_t chunk_size, Fn&& fn) {
    if (n == 0) return;
    std::size_t n_chunks = (n + chunk_size - 1) / chunk_size;
    std::size_t workers = std::min(thread_count(), n_chunks);
    if (workers <= 1) {
        for (std::size_t c = 0; c < n_chunks; ++c)
            fn(c, c * chunk_size, std::min(n, (c + 1) * chunk_size));
        return;
    }
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (;;) {
            std::size_t c = next.fetch_add(1);
            if (c >= n_chunks) break;
            fn(c, c * chunk_size, std::min(n, (c + 1) * chunk_size));
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t t = 0; t + 1 < workers; ++t) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();
}

/// Run fn(i) for i in [0,n) on the worker pool, one index per task. Used for
/// coarse job-level parallelism (per-J sweeps, per-realisation loops).
template <typename Fn>
void parallel_for_jobs(std::size_t n, Fn&& fn) {
    parallel_for_chunks(n, 1, [&](std::size_t, std::size_t b, std::size_t) { fn(b); });
}

} // namespace snn
