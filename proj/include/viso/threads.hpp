// Replica worker pool. Work is claimed by an atomic counter, each body call
// owns its replica index exclusively, and callers store results by index, so
// output is independent of thread count and completion order.
#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace viso {

// VISO_THREADS overrides; otherwise the hardware count, at least 1
inline int default_thread_count() {
  if (const char* env = std::getenv("VISO_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end && *end == '\0' && v >= 1 && v <= 4096) return static_cast<int>(v);
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc ? static_cast<int>(hc) : 1;
}

// Calls body(r) exactly once for every r in [0, replicas). The first thrown
// exception is rethrown on the calling thread after the pool drains; later
// replicas may then be skipped, so throwing bodies are for hard failures
// only (recoverable per-replica failures belong inside the body).
template <typename Body>
void parallel_replicas(long long replicas, int threads, Body&& body) {
  if (replicas <= 0) return;
  const int workers = static_cast<int>(std::min<long long>(std::max(threads, 1), replicas));
  if (workers == 1) {
    for (long long r = 0; r < replicas; r++) body(r);
    return;
  }
  std::atomic<long long> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  const auto work = [&] {
    while (!stop.load(std::memory_order_relaxed)) {
      const long long r = next.fetch_add(1, std::memory_order_relaxed);
      if (r >= replicas) return;
      try {
        body(r);
      } catch (...) {
        {
          const std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
        stop.store(true, std::memory_order_relaxed);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int w = 0; w < workers; w++) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace viso
