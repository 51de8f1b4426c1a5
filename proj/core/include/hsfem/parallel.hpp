#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <thread>
#include <vector>

namespace hsfem {

/// Chunked parallel map with deterministic staging: the chunk boundaries
/// depend only on (n, chunk_size), never on the thread count, so per-chunk
/// results merged in chunk order reproduce the serial result bit for bit.
/// fn(begin, end, chunk_id) is called once per chunk; chunk_id is dense.
void for_chunks(std::int64_t n, std::int64_t chunk_size,
                const std::function<void(std::int64_t, std::int64_t, int)>& fn);

int num_chunks(std::int64_t n, std::int64_t chunk_size);

/// Produce/merge variant with bounded staging memory: workers produce one
/// Stage object per chunk, the caller consumes them strictly in chunk order
/// while production continues. The merge order (and therefore every
/// floating-point accumulation) is independent of the thread count, and at
/// most ~2x workers stages are alive at any time.
template <class Stage, class Produce, class Merge>
void for_chunks_ordered(std::int64_t n, std::int64_t chunk_size, Produce&& produce,
                        Merge&& merge) {
    const int chunks = num_chunks(n, chunk_size);
    if (chunks == 0) return;
    const unsigned hw = std::thread::hardware_concurrency();
    const int workers =
        static_cast<int>(std::min<std::int64_t>(hw == 0 ? 1 : hw, chunks));

    if (workers <= 1) {
        for (int c = 0; c < chunks; ++c) {
            const std::int64_t begin = c * chunk_size;
            merge(produce(begin, std::min(n, begin + chunk_size), c), c);
        }
        return;
    }

    std::mutex mtx;
    std::condition_variable cv;
    std::map<int, Stage> ready;
    std::atomic<int> next{0};
    std::atomic<int> merge_next{0};
    std::exception_ptr error;
    const std::size_t high_water = static_cast<std::size_t>(2 * workers);

    auto work = [&] {
        for (;;) {
            const int c = next.fetch_add(1);
            if (c >= chunks) return;
            const std::int64_t begin = c * chunk_size;
            try {
                Stage s = produce(begin, std::min(n, begin + chunk_size), c);
                std::unique_lock<std::mutex> lock(mtx);
                // The chunk the merger is waiting for may always enter, or
                // the pipeline would deadlock under a slow producer.
                cv.wait(lock, [&] {
                    return ready.size() < high_water || c == merge_next.load() ||
                           static_cast<bool>(error);
                });
                if (error) return;
                ready.emplace(c, std::move(s));
                cv.notify_all();
            } catch (...) {
                std::lock_guard<std::mutex> lock(mtx);
                if (!error) error = std::current_exception();
                cv.notify_all();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t) pool.emplace_back(work);

    for (int c = 0; c < chunks; ++c) {
        merge_next.store(c);
        cv.notify_all();
        Stage s = [&] {
            std::unique_lock<std::mutex> lock(mtx);
            cv.wait(lock, [&] { return ready.count(c) != 0 || error; });
            if (error) {
                for (auto& t : pool) t.detach();
                std::rethrow_exception(error);
            }
            Stage out = std::move(ready.at(c));
            ready.erase(c);
            cv.notify_all();
            return out;
        }();
        merge(std::move(s), c);
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace hsfem
