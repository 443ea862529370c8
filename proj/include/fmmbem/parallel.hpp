#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace fmmbem {

/// Runs body(i) for i in [0, n) on up to `threads` workers. With `dynamic`
/// off, each worker gets one contiguous block; with it on, workers pull
/// chunks from a shared counter. The first exception is rethrown.
template <class Body>
void parallel_for(std::size_t n, int threads, bool dynamic, Body&& body) {
  const std::size_t nt = std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), n);
  if (nt <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mu;
  std::atomic<std::size_t> next{0};
  const std::size_t chunk = std::max<std::size_t>(1, n / (nt * 16));
  auto worker = [&](std::size_t w) {
    try {
      if (dynamic) {
        for (;;) {
          const std::size_t b = next.fetch_add(chunk);
          if (b >= n) break;
          const std::size_t e = std::min(n, b + chunk);
          for (std::size_t i = b; i < e; ++i) body(i);
        }
      } else {
        const std::size_t b = n * w / nt, e = n * (w + 1) / nt;
        for (std::size_t i = b; i < e; ++i) body(i);
      }
    } catch (...) {
      std::lock_guard lock(error_mu);
      if (!error) error = std::current_exception();
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(nt - 1);
  for (std::size_t w = 1; w < nt; ++w) pool.emplace_back(worker, w);
  worker(0);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

/// Number of hardware threads, at least 1.
inline int hardware_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

}  // namespace fmmbem
