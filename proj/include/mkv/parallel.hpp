// Thread-count control and a deterministic chunked parallel_for.
#pragma once

#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace mkv {

namespace detail {

inline int& thread_cap() {
  static int cap = 0;  // 0 means "not set"
  return cap;
}

inline bool& in_parallel_region() {
  thread_local bool flag = false;
  return flag;
}

}  // namespace detail

/// Caps the number of worker threads (0 restores the default).
inline void set_max_threads(int n) { detail::thread_cap() = n > 0 ? n : 0; }

/// Worker count: set_max_threads() if set, else MKV_THREADS, else hardware.
inline int max_threads() {
  if (detail::thread_cap() > 0) return detail::thread_cap();
  if (const char* env = std::getenv("MKV_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

// Runs f(i) for every i in [0, n), split into contiguous chunks, one chunk per
// worker. Callers must write results to disjoint slots so the outcome does not
// depend on the thread count. Nested calls execute serially on the calling
// worker. The first exception thrown by any worker is rethrown to the caller.
template <class F>
void parallel_for(std::size_t n, F&& f) {
  if (n == 0) return;
  std::size_t workers = static_cast<std::size_t>(max_threads());
  if (workers > n) workers = n;
  if (workers <= 1 || detail::in_parallel_region()) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }

  std::mutex err_mutex;
  std::exception_ptr first_error;
  auto run_chunk = [&](std::size_t begin, std::size_t end) {
    detail::in_parallel_region() = true;
    try {
      for (std::size_t i = begin; i < end; ++i) f(i);
    } catch (...) {
      std::lock_guard<std::mutex> lock(err_mutex);
      if (!first_error) first_error = std::current_exception();
    }
    detail::in_parallel_region() = false;
  };

  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) {
    std::size_t begin = n * w / workers;
    std::size_t end = n * (w + 1) / workers;
    pool.emplace_back(run_chunk, begin, end);
  }
  run_chunk(0, n / workers);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace mkv
