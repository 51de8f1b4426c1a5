#include "hsfem/parallel.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace hsfem {

int num_chunks(std::int64_t n, std::int64_t chunk_size) {
    if (n <= 0) return 0;
    return static_cast<int>((n + chunk_size - 1) / chunk_size);
}

void for_chunks(std::int64_t n, std::int64_t chunk_size,
                const std::function<void(std::int64_t, std::int64_t, int)>& fn) {
    const int chunks = num_chunks(n, chunk_size);
    if (chunks == 0) return;
    const unsigned hw = std::thread::hardware_concurrency();
    const int workers = static_cast<int>(std::min<std::int64_t>(hw == 0 ? 1 : hw, chunks));

    if (workers <= 1) {
        for (int c = 0; c < chunks; ++c) {
            const std::int64_t begin = c * chunk_size;
            fn(begin, std::min(n, begin + chunk_size), c);
        }
        return;
    }

    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&] {
        for (;;) {
            const int c = next.fetch_add(1);
            if (c >= chunks) return;
            const std::int64_t begin = c * chunk_size;
            try {
                fn(begin, std::min(n, begin + chunk_size), c);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace hsfem
