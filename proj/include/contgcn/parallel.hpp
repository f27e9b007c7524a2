#pragma once

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace contgcn {

// Worker parallelism is opt-in: CONTGCN_THREADS sets the cap, default 1.
// Results are thread-count invariant because callers reduce per-index
// buffers in index order, never into shared accumulators.
inline int worker_count() {
  const char* env = std::getenv("CONTGCN_THREADS");
  if (!env) return 1;
  const int n = std::atoi(env);
  if (n < 1) return 1;
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  return std::min<int>(n, static_cast<int>(hw));
}

template <typename Fn>
void parallel_for(std::size_t n, const Fn& fn) {
  const int workers = worker_count();
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t nthreads = std::min<std::size_t>(workers, n);
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  for (std::size_t t = 0; t < nthreads; ++t) {
    pool.emplace_back([t, n, nthreads, &fn] {
      for (std::size_t i = t; i < n; i += nthreads) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace contgcn
