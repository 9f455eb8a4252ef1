#pragma once

// Chunked fan-out with a fixed merge order. Each chunk is processed by
// exactly one worker and its result stored in its own slot, so the caller
// can reduce slots in index order and get the same bits for any worker
// count.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace chaoslab::detail {

inline constexpr std::size_t chunk_size = 4096;

inline unsigned resolve_workers(unsigned requested)
{
    if (requested > 0)
        return requested;
    return std::max(1u, std::thread::hardware_concurrency());
}

template<class Result, class Fn>
std::vector<Result> map_chunks(std::size_t count, unsigned workers, Fn&& fn)
{
    std::size_t const chunks = (count + chunk_size - 1) / chunk_size;
    std::vector<Result> out(chunks);
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;

    auto work = [&] {
        for (std::size_t c; (c = next.fetch_add(1)) < chunks;)
        {
            try
            {
                std::size_t begin = c * chunk_size;
                std::size_t end = std::min(count, begin + chunk_size);
                out[c] = fn(begin, end);
            }
            catch (...)
            {
                std::lock_guard lock(error_mutex);
                if (!error)
                    error = std::current_exception();
            }
        }
    };

    unsigned const n = std::min<std::size_t>(resolve_workers(workers), std::max<std::size_t>(chunks, 1));
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < n; ++w)
        pool.emplace_back(work);
    work();
    for (auto& th : pool)
        th.join();
    if (error)
        std::rethrow_exception(error);
    return out;
}

}  // namespace chaoslab::detail
