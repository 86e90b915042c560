#pragma once

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace bp {

/// Worker count: the BP_THREADS environment variable when set, otherwise
/// hardware concurrency.
inline int max_threads() {
  if (const char* env = std::getenv("BP_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const int hw = static_cast<int>(std::thread::hardware_concurrency());
  return hw > 0 ? hw : 1;
}

/// Static-partition parallel map over [0, n). Work items must write only to
/// their own slots; the partition is deterministic, so results are identical
/// for any thread count.
inline void parallel_for(int n, const std::function<void(int)>& body) {
  const int workers = std::min(max_threads(), std::max(n, 1));
  if (workers <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (int i = w; i < n; i += workers) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace bp
