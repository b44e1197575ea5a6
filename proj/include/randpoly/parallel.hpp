#pragma once

// Index-partitioned worker pool and order-fixed reductions.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace randpoly {

//! Worker count from RANDPOLY_WORKERS, else the hardware concurrency.
inline unsigned default_workers()
{
    if (const char* env = std::getenv("RANDPOLY_WORKERS")) {
        try {
            const long v = std::stol(env);
            if (v >= 1)
                return static_cast<unsigned>(v);
        } catch (std::exception const&) {
        }
        throw std::invalid_argument(std::string("RANDPOLY_WORKERS must be a positive integer: ") +
                                    env);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/*!
 * Calls f(i) for every i in [0, count) on up to `workers` threads.
 *
 * Work is handed out by an atomic index, so f must write its result to a
 * slot owned by i. If any call throws, the exception from the smallest
 * failing index is rethrown after all threads finish.
 */
template <class F>
void parallel_for(std::size_t count, unsigned workers, F&& f)
{
    workers = std::max(1u, workers);
    if (workers == 1 || count < 2) {
        for (std::size_t i = 0; i < count; ++i)
            f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex err_mutex;
    std::size_t err_index = count;
    std::exception_ptr err;
    auto run = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= count)
                return;
            try {
                f(i);
            } catch (...) {
                std::lock_guard lock(err_mutex);
                if (i < err_index) {
                    err_index = i;
                    err = std::current_exception();
                }
            }
        }
    };
    const auto nthreads = static_cast<std::size_t>(std::min<std::size_t>(workers, count));
    std::vector<std::thread> pool;
    pool.reserve(nthreads - 1);
    for (std::size_t t = 1; t < nthreads; ++t)
        pool.emplace_back(run);
    run();
    for (auto& th : pool)
        th.join();
    if (err)
        std::rethrow_exception(err);
}

//! Sum over a fixed binary tree on the indices.
inline double pairwise_sum(std::span<const double> v)
{
    if (v.size() <= 8) {
        double s = 0.0;
        for (double x : v)
            s += x;
        return s;
    }
    const auto h = v.size() / 2;
    return pairwise_sum(v.first(h)) + pairwise_sum(v.subspan(h));
}

}  // namespace randpoly
