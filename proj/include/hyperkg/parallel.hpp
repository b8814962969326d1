#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace hkg {

// Runs fn(i) for every i in [0, n) on at most `max_workers` threads.
// Returns one exception_ptr per index (null on success); never throws from workers.
template <class Fn>
std::vector<std::exception_ptr> parallel_for(std::size_t n, std::size_t max_workers, Fn&& fn) {
    std::vector<std::exception_ptr> errors(n);
    auto run_one = [&](std::size_t i) {
        try {
            fn(i);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };
    const std::size_t workers = std::min(n, std::max<std::size_t>(1, max_workers));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) run_one(i);
        return errors;
    }
    std::atomic<std::size_t> next{0};
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) run_one(i);
            });
        }
    }
    return errors;
}

}  // namespace hkg
