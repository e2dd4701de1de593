#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace cubeforge {

// Worker count: CUBEFORGE_THREADS if set, else hardware concurrency.
inline unsigned thread_count()
{
    if (const char *s = std::getenv("CUBEFORGE_THREADS")) {
        int n = std::atoi(s);
        if (n > 0)
            return unsigned(n);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

// Runs fn(i) for i in [0, n) on a pool; indices are claimed dynamically.
// The first exception thrown by any task is rethrown after all workers join.
template <class Fn>
void parallel_for(std::size_t n, Fn &&fn, unsigned threads = 0)
{
    if (!threads)
        threads = thread_count();
    threads = unsigned(std::min<std::size_t>(threads, n));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i)
            fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex m;
    auto work = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= n)
                return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lk(m);
                if (!err)
                    err = std::current_exception();
                next = n;
            }
        }
    };
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t)
        pool.emplace_back(work);
    pool.clear();
    if (err)
        std::rethrow_exception(err);
}

} // namespace cubeforge
