#pragma once

// Index-parallel loop over independent work items. Results must be written to
// per-index slots so the outcome does not depend on scheduling.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace nbwk::detail {

inline std::size_t worker_count(std::size_t n) {
  std::size_t hw = std::max(1U, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("NBWK_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) hw = static_cast<std::size_t>(v);
  }
  return std::min(hw, n);
}

template <class F>
void parallel_for(std::size_t n, F&& body) {
  const std::size_t workers = worker_count(n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto run = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) error = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace nbwk::detail
