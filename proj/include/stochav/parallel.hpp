/** \file parallel.hpp
    \brief Deterministic worker pool: tasks are indexed, results land in
           per-index slots, and every reduction downstream runs in index
           order, so numeric output is independent of the worker count.
*/
#pragma once

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "stochav/types.hpp"

namespace stochav {

inline int resolve_workers(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

/// Runs fn(i) for i in [0, total) on `workers` threads.  The first exception
/// thrown by any task is rethrown on the caller after all threads join.
template <class Fn>
void parallel_for(std::int64_t total, int workers, Fn&& fn) {
    workers = resolve_workers(workers);
    if (workers <= 1 || total <= 1) {
        for (std::int64_t i = 0; i < total; ++i) fn(i);
        return;
    }
    std::atomic<std::int64_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto body = [&] {
        for (;;) {
            const std::int64_t i = next.fetch_add(1);
            if (i >= total) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace stochav
