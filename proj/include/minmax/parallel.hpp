#pragma once

// Deterministic parallel loops. Work is split into fixed-size chunks that do
// not depend on the worker count; per-chunk results are combined in chunk
// order, so totals are bit-identical for any number of threads.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace minmax {

inline std::atomic<int>& thread_count_storage() {
    static std::atomic<int> count{static_cast<int>(std::thread::hardware_concurrency())};
    return count;
}

inline int thread_count() {
    int c = thread_count_storage().load();
    return c > 0 ? c : 1;
}

inline void set_thread_count(int count) { thread_count_storage().store(count > 0 ? count : 1); }

inline constexpr std::uint64_t kDefaultChunk = 1024;

// fn(chunk_index, begin, end) is invoked once per chunk, possibly on
// different threads. Chunk boundaries depend only on (total, chunk_size).
template <class Fn>
void for_each_chunk(std::uint64_t total, std::uint64_t chunk_size, Fn&& fn) {
    if (total == 0) return;
    if (chunk_size == 0) chunk_size = kDefaultChunk;
    const std::uint64_t nchunks = (total + chunk_size - 1) / chunk_size;
    const int workers = static_cast<int>(
        std::min<std::uint64_t>(static_cast<std::uint64_t>(thread_count()), nchunks));

    if (workers <= 1) {
        for (std::uint64_t c = 0; c < nchunks; ++c)
            fn(c, c * chunk_size, std::min(total, (c + 1) * chunk_size));
        return;
    }

    std::atomic<std::uint64_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_guard;

    auto work = [&] {
        for (;;) {
            const std::uint64_t c = next.fetch_add(1);
            if (c >= nchunks || failed.load()) return;
            try {
                fn(c, c * chunk_size, std::min(total, (c + 1) * chunk_size));
            } catch (...) {
                std::scoped_lock lock(error_guard);
                if (!error) error = std::current_exception();
                failed.store(true);
                return;
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

// Per-replication values computed in parallel: out[rep] = fn(rep).
template <class Fn>
std::vector<double> per_rep_values(std::uint64_t reps, Fn&& fn,
                                   std::uint64_t chunk_size = kDefaultChunk) {
    std::vector<double> out(reps);
    for_each_chunk(reps, chunk_size, [&](std::uint64_t, std::uint64_t lo, std::uint64_t hi) {
        for (std::uint64_t r = lo; r < hi; ++r) out[r] = fn(r);
    });
    return out;
}

// Parallel map-reduce with a sequential, chunk-ordered combine.
template <class T, class Produce, class Combine>
T chunked_reduce(std::uint64_t total, T init, Produce&& produce, Combine&& combine,
                 std::uint64_t chunk_size = kDefaultChunk) {
    if (total == 0) return init;
    if (chunk_size == 0) chunk_size = kDefaultChunk;
    const std::uint64_t nchunks = (total + chunk_size - 1) / chunk_size;
    std::vector<T> partial(nchunks, init);
    for_each_chunk(total, chunk_size, [&](std::uint64_t c, std::uint64_t lo, std::uint64_t hi) {
        partial[c] = produce(lo, hi);
    });
    T acc = init;
    for (std::uint64_t c = 0; c < nchunks; ++c) acc = combine(acc, partial[c]);
    return acc;
}

}  // namespace minmax
