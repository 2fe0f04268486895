#pragma once

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace qgh {

/// Worker count from QGH_THREADS (default 1, never above hardware concurrency).
inline int thread_count() {
  int n = 1;
  if (const char* env = std::getenv("QGH_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) n = v;
  }
  const int hw = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return std::min(n, hw);
}

/// Runs body(i) for i in [0, n). Each index is handled by exactly one worker,
/// so results written per index are independent of the thread count.
template <class Body>
void parallel_for(int n, Body&& body) {
  const int workers = std::min(thread_count(), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (int i = w; i < n; i += workers) body(i);
    });
  for (auto& t : pool) t.join();
}

}  // namespace qgh
