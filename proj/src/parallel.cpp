#include "qsflow/parallel.hpp"

#include <atomic>
#include <thread>
#include <vector>

namespace qsflow {

namespace {
std::atomic<int> g_threads{1};
}

int thread_count() { return g_threads.load(std::memory_order_relaxed); }

void set_thread_count(int n) {
    g_threads.store(n < 1 ? 1 : n, std::memory_order_relaxed);
}

namespace detail {

void parallel_for_impl(std::size_t n, void* ctx, void (*body)(void*, std::size_t, std::size_t)) {
    const int workers = thread_count();
    if (workers <= 1 || n < 4096) {
        body(ctx, 0, n);
        return;
    }
    const std::size_t chunk = (n + workers - 1) / workers;
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (int t = 1; t < workers; ++t) {
        const std::size_t b = t * chunk;
        if (b >= n) break;
        const std::size_t e = std::min(n, b + chunk);
        pool.emplace_back(body, ctx, b, e);
    }
    body(ctx, 0, std::min(n, chunk));
    for (auto& th : pool) th.join();
}

} // namespace detail
} // namespace qsflow
