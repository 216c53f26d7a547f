#pragma once

#include <cmath>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

// Fixed-order reductions and a static-partition parallel loop. Every sum in
// the engine goes through the same blocked-pairwise tree, so results do not
// depend on the worker count.

namespace mkv {

namespace detail {

constexpr std::size_t kPairwiseBlock = 32;

template <typename F>
double pairwise_accumulate(std::size_t lo, std::size_t hi, F&& term) {
    const std::size_t n = hi - lo;
    if (n <= kPairwiseBlock) {
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += term(i);
        return s;
    }
    const std::size_t mid = lo + n / 2;
    return pairwise_accumulate(lo, mid, term) + pairwise_accumulate(mid, hi, term);
}

} // namespace detail

/// Blocked-pairwise sum of f(0..n-1); the reduction tree depends on n only.
template <typename F>
double pairwise_sum_of(std::size_t n, F&& term) {
    if (n == 0) return 0.0;
    return detail::pairwise_accumulate(0, n, term);
}

inline double pairwise_sum(std::span<const double> x) {
    return pairwise_sum_of(x.size(), [&](std::size_t i) { return x[i]; });
}

/// Unweighted inner product sum_i u_i v_i.
inline double dot(std::span<const double> u, std::span<const double> v) {
    return pairwise_sum_of(u.size(), [&](std::size_t i) { return u[i] * v[i]; });
}

/// Empirical inner product <u,v>_N = (1/N) sum u_i v_i.
inline double dot_n(std::span<const double> u, std::span<const double> v) {
    return dot(u, v) / static_cast<double>(u.size());
}

/// Empirical norm ||v||_N = sqrt(<v,v>_N).
inline double norm_n(std::span<const double> v) {
    return std::sqrt(dot_n(v, v));
}

inline double mean(std::span<const double> x) {
    return pairwise_sum(x) / static_cast<double>(x.size());
}

/// Runs body(i) for i in [0, n) on up to `workers` threads with contiguous
/// static chunks. Each index is processed exactly once; bodies must write to
/// disjoint locations. The first exception thrown by any worker is rethrown.
template <typename F>
void parallel_for(std::size_t n, unsigned workers, F&& body) {
    if (n == 0) return;
    if (workers <= 1 || n == 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    const unsigned t = static_cast<unsigned>(std::min<std::size_t>(workers, n));
    std::vector<std::thread> pool;
    pool.reserve(t);
    std::exception_ptr first_error;
    std::mutex error_mutex;
    const std::size_t chunk = (n + t - 1) / t;
    for (unsigned w = 0; w < t; ++w) {
        const std::size_t lo = static_cast<std::size_t>(w) * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&, lo, hi]() {
            try {
                for (std::size_t i = lo; i < hi; ++i) body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace mkv
