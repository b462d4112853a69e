#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace chronodce {

// Worker cap: min(hardware, CHRONO_DCE_THREADS, tasks), at least 1.
inline std::size_t worker_count(std::size_t tasks) {
  std::size_t n = std::thread::hardware_concurrency();
  if (n == 0) n = 1;
  if (const char* env = std::getenv("CHRONO_DCE_THREADS")) {
    const long cap = std::atol(env);
    if (cap >= 1 && static_cast<std::size_t>(cap) < n) n = static_cast<std::size_t>(cap);
  }
  return std::max<std::size_t>(1, std::min(n, tasks));
}

// Runs f(i) for i in [0, n) across contiguous index blocks. Results must be
// written to preallocated per-index slots so the outcome is independent of
// the worker count.
template <typename F>
void parallel_for(std::size_t n, F&& f) {
  if (n == 0) return;
  const std::size_t workers = worker_count(n);
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, w, &f, &errors] {
      try {
        for (std::size_t i = lo; i < hi; ++i) f(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace chronodce
