#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace asep {

namespace detail {
inline int& worker_cap_ref() {
  static int cap = static_cast<int>(std::thread::hardware_concurrency());
  return cap;
}

/// Run run_block(b) for b in [0, nblocks) on up to max_workers() threads.
/// The first exception thrown by any block is rethrown on the caller.
template <class RunBlock>
void run_blocks(std::int64_t nblocks, RunBlock&& run_block) {
  const int workers = static_cast<int>(std::min<std::int64_t>(worker_cap_ref() > 0
                                                                  ? worker_cap_ref()
                                                                  : 1,
                                                              nblocks));
  if (workers <= 1) {
    for (std::int64_t b = 0; b < nblocks; ++b) run_block(b);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      try {
        for (std::int64_t b; (b = next.fetch_add(1)) < nblocks;) run_block(b);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        next.store(nblocks);  // drain remaining work
      }
    });
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}
}  // namespace detail

inline int max_workers() { return detail::worker_cap_ref() > 0 ? detail::worker_cap_ref() : 1; }
inline void set_max_workers(int n) { detail::worker_cap_ref() = n > 0 ? n : 1; }

/// Deterministic parallel reduction: [0,n) is split into fixed-size blocks,
/// each block is summed sequentially, and block results are combined in block
/// order.  The partition does not depend on the worker count, so the result
/// is bit-identical for any number of workers.
template <class T, class F>
T parallel_sum(std::int64_t n, F&& term, std::int64_t chunk = 16384) {
  if (n <= 0) return T{};
  const std::int64_t nblocks = (n + chunk - 1) / chunk;
  std::vector<T> partial(static_cast<std::size_t>(nblocks), T{});
  detail::run_blocks(nblocks, [&](std::int64_t b) {
    const std::int64_t lo = b * chunk;
    const std::int64_t hi = std::min(n, lo + chunk);
    T s{};
    for (std::int64_t i = lo; i < hi; ++i) s += term(i);
    partial[static_cast<std::size_t>(b)] = s;
  });
  T total{};
  for (const T& s : partial) total += s;
  return total;
}

/// Deterministic parallel tallying for Monte Carlo: per_item fills event
/// counts for sample i into a k-slot tally.
template <class F>
std::vector<std::int64_t> parallel_tally(std::int64_t n, std::size_t k, F&& per_item,
                                         std::int64_t chunk = 4096) {
  std::vector<std::int64_t> total(k, 0);
  if (n <= 0) return total;
  const std::int64_t nblocks = (n + chunk - 1) / chunk;
  std::vector<std::vector<std::int64_t>> partial(static_cast<std::size_t>(nblocks));
  detail::run_blocks(nblocks, [&](std::int64_t b) {
    std::vector<std::int64_t> tally(k, 0);
    const std::int64_t lo = b * chunk;
    const std::int64_t hi = std::min(n, lo + chunk);
    for (std::int64_t i = lo; i < hi; ++i) per_item(i, tally);
    partial[static_cast<std::size_t>(b)] = std::move(tally);
  });
  for (const auto& tally : partial)
    for (std::size_t j = 0; j < k; ++j) total[j] += tally[j];
  return total;
}

}  // namespace asep
