#pragma once

// Minimal deterministic worker pool: items are claimed through an atomic
// counter and results are written by index, so the output never depends on
// scheduling. Worker count comes from DIQKD_THREADS when set.

#include <atomic>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace diqkd {

inline int worker_count(int requested = 0) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("DIQKD_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

template <typename Fn>
void parallel_for(int n_items, const Fn& fn, int n_threads = 0) {
  const int workers = std::min(worker_count(n_threads), n_items);
  if (workers <= 1) {
    for (int i = 0; i < n_items; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n_items; i = next.fetch_add(1)) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace diqkd
