#ifndef EPIFIT_DETAIL_PARALLEL_HPP
#define EPIFIT_DETAIL_PARALLEL_HPP

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace epifit::detail {

/// Runs fn(i) for i in [0, n) on up to `max_threads` workers. Results must be
/// written into per-index slots by the caller, which keeps the outcome
/// independent of scheduling. The first exception thrown by any worker is
/// rethrown after all workers finish.
template <typename Fn>
void parallel_for_index(std::size_t n, unsigned max_threads, Fn&& fn) {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    const unsigned workers =
        static_cast<unsigned>(std::min<std::size_t>(n, std::min(hw, max_threads)));

    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace epifit::detail

#endif
