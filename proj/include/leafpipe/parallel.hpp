#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

namespace leafpipe {

/// Worker count from an explicit flag, else LEAFPIPE_JOBS, else 1.
int resolve_jobs(std::optional<int> flag);

/// Runs body(i) for i in [0, n) on up to `jobs` threads. Each index is
/// processed exactly once; callers write results to slot i so the output
/// never depends on scheduling. The first exception thrown is rethrown.
template <typename Body>
void parallel_for(std::size_t n, int jobs, Body&& body) {
  if (n == 0) return;
  const std::size_t workers = std::min<std::size_t>(n, jobs < 1 ? 1 : static_cast<std::size_t>(jobs));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto run = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(run);
  run();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace leafpipe
