#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace percolab {

// Runs task(worker, index) for index in [0, count) on `workers` threads.
// Results must be written to index-addressed slots; reduction is the caller's
// job and happens in index order, so output never depends on `workers`.
// The first exception thrown by any task is rethrown after all threads join.
template <class Task>
void for_each_replicate(std::uint64_t count, unsigned workers, Task&& task) {
  workers = std::max(1u, workers);
  if (workers == 1 || count < 2) {
    for (std::uint64_t i = 0; i < count; ++i) task(0u, i);
    return;
  }
  constexpr std::uint64_t kChunk = 16;
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  const unsigned n = static_cast<unsigned>(std::min<std::uint64_t>(workers, count));
  pool.reserve(n);
  for (unsigned w = 0; w < n; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (;;) {
          const std::uint64_t begin = next.fetch_add(kChunk);
          if (begin >= count) break;
          const std::uint64_t end = std::min(count, begin + kChunk);
          for (std::uint64_t i = begin; i < end; ++i) task(w, i);
        }
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(count);
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace percolab
