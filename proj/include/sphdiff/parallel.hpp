#pragma once

// Deterministic sharded parallelism. Work is split into a fixed number of
// shards; each shard accumulates locally and results merge in shard order,
// so output is bit-reproducible for a fixed shard count.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace sphdiff {

int thread_cap();
void set_thread_cap(int n);

// Runs fn(shard, begin, end) over [0, n) split into `shards` contiguous
// ranges, using at most thread_cap() threads.
template <typename Fn>
void parallel_shards(std::size_t n, int shards, Fn&& fn) {
    if (n == 0) return;
    shards = std::max(1, std::min<int>(shards, static_cast<int>(n)));
    const std::size_t chunk = (n + shards - 1) / shards;
    const int workers = std::min(shards, thread_cap());
    if (workers <= 1) {
        for (int s = 0; s < shards; ++s) {
            std::size_t b = s * chunk, e = std::min(n, b + chunk);
            if (b < e) fn(s, b, e);
        }
        return;
    }
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&]() {
            for (;;) {
                int s = next.fetch_add(1);
                if (s >= shards) return;
                std::size_t b = s * chunk, e = std::min(n, b + chunk);
                if (b < e) fn(s, b, e);
            }
        });
    for (auto& t : pool) t.join();
}

// Kahan-compensated sum of fn(i) over [0, n), sharded deterministically.
template <typename Fn>
double parallel_sum(std::size_t n, int shards, Fn&& fn) {
    shards = std::max(1, shards);
    std::vector<double> partial(shards, 0.0);
    parallel_shards(n, shards, [&](int s, std::size_t b, std::size_t e) {
        double sum = 0.0, comp = 0.0;
        for (std::size_t i = b; i < e; ++i) {
            double y = fn(i) - comp;
            double t = sum + y;
            comp = (t - sum) - y;
            sum = t;
        }
        partial[s] = sum;
    });
    double total = 0.0, comp = 0.0;
    for (double p : partial) {
        double y = p - comp;
        double t = total + y;
        comp = (t - total) - y;
        total = t;
    }
    return total;
}

}  // namespace sphdiff
