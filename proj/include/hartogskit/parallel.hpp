#ifndef HARTOGSKIT_PARALLEL_HPP
#define HARTOGSKIT_PARALLEL_HPP

#include <algorithm>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace hk {

/// Process-wide cap on worker threads used by per-point loops. 1 means serial.
void set_thread_limit(int threads);
int thread_limit();

/// Run body(i) for i in [0, count). Each index is handled exactly once; results
/// written to per-index slots are independent of the thread count.
template <typename Body>
void parallel_for(std::size_t count, Body&& body)
{
    const int workers = thread_limit();
    if (workers <= 1 || count < 2) {
        for (std::size_t i = 0; i < count; ++i)
            body(i);
        return;
    }
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(workers), count);
    for (std::size_t w = 0; w < n; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < count; i += n)
                    body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error)
                    first_error = std::current_exception();
            }
        });
    }
    for (auto& t : pool)
        t.join();
    if (first_error)
        std::rethrow_exception(first_error);
}

} // namespace hk

#endif // HARTOGSKIT_PARALLEL_HPP
