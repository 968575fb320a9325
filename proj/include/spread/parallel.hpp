#pragma once

#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace spread {

// Worker count: SPREAD_THREADS if set, else hardware concurrency.
inline unsigned thread_count() {
  if (const char* env = std::getenv("SPREAD_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<unsigned>(v);
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc ? hc : 1;
}

// Runs f(i) for i in [0,n).  Each index is processed exactly once and results
// must be written to per-index slots, so the outcome is identical for any
// worker count.  The first exception is rethrown on the caller thread.
template <typename F>
void parallel_for(std::size_t n, F&& f) {
  const unsigned workers = static_cast<unsigned>(
      std::min<std::size_t>(thread_count(), n == 0 ? 1 : n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::mutex err_mutex;
  std::exception_ptr first_error;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) f(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace spread
