#pragma once

#include <cstddef>

namespace qsflow {

// Process-wide worker count for data-parallel node loops. Workers write to
// disjoint index ranges only; no parallel reductions anywhere, so results are
// bitwise independent of the thread count.
int thread_count();
void set_thread_count(int n);

namespace detail {
void parallel_for_impl(std::size_t n, void* ctx, void (*body)(void*, std::size_t, std::size_t));
}

// f(begin, end) is invoked on contiguous chunks covering [0, n).
template <class F>
void parallel_for(std::size_t n, F&& f) {
    auto thunk = [](void* ctx, std::size_t b, std::size_t e) {
        (*static_cast<F*>(ctx))(b, e);
    };
    detail::parallel_for_impl(n, &f, thunk);
}

} // namespace qsflow
