#ifndef GLAVA_PARALLEL_HPP
#define GLAVA_PARALLEL_HPP

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace glava {

inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Run fn(0..n_tasks-1), each task exactly once. Tasks must be pure functions
// of their index writing to disjoint slots; then results do not depend on the
// schedule and the thread count only changes wall time. The first exception
// is rethrown on the caller thread.
template <typename Fn>
void parallel_for(std::size_t n_tasks, int threads, Fn&& fn) {
    const int n_threads = resolve_threads(threads);
    if (n_tasks == 0) return;
    if (n_threads <= 1 || n_tasks == 1) {
        for (std::size_t i = 0; i < n_tasks; ++i) fn(i);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n_tasks) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };

    std::vector<std::thread> pool;
    const std::size_t n_workers =
        std::min<std::size_t>(static_cast<std::size_t>(n_threads), n_tasks);
    pool.reserve(n_workers);
    for (std::size_t t = 0; t < n_workers; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace glava

#endif  // GLAVA_PARALLEL_HPP
