#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace melc {

// Worker cap from MELC_THREADS; 0 or unset means hardware concurrency.
inline std::size_t thread_count() {
  std::size_t n = 0;
  if (const char* env = std::getenv("MELC_THREADS")) {
    try {
      n = static_cast<std::size_t>(std::stoul(env));
    } catch (...) {
      n = 0;
    }
  }
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return n;
}

namespace detail {
inline thread_local bool in_parallel_region = false;
}

// Runs body(i) for i in [0, count). Each index is an independent unit, results
// must be written to per-index slots. Nested calls run serially.
template <typename Body>
void parallel_for(std::size_t count, Body&& body) {
  const std::size_t workers = std::min(thread_count(), count);
  if (workers <= 1 || detail::in_parallel_region) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto run = [&] {
    detail::in_parallel_region = true;
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) break;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
    detail::in_parallel_region = false;
  };
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (std::size_t t = 0; t + 1 < workers; ++t) pool.emplace_back(run);
    run();
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace melc
