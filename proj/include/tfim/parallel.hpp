#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace tfim {

/// Worker count from TFIM_WORKERS (default 1; "0" or "auto" means hardware concurrency).
inline int default_workers() {
    const char* env = std::getenv("TFIM_WORKERS");
    if (!env || !*env) return 1;
    const std::string v(env);
    if (v == "0" || v == "auto") return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    try {
        return std::max(1, std::stoi(v));
    } catch (...) {
        return 1;
    }
}

/// Calls fn(i) for i in [0, count), strided over `workers` threads. Each index
/// runs exactly once; the first exception is rethrown after all threads join.
template <class Fn>
void parallel_for(std::size_t count, int workers, Fn&& fn) {
    const std::size_t w = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(1, workers)), 1,
                                                  std::max<std::size_t>(1, count));
    if (w == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(w);
    std::vector<std::thread> pool;
    pool.reserve(w);
    for (std::size_t t = 0; t < w; ++t)
        pool.emplace_back([&, t] {
            try {
                for (std::size_t i = t; i < count; i += w) fn(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace tfim
