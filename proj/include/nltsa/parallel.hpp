#pragma once

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

#include "nltsa/types.hpp"

namespace nltsa {

/// Worker count: NLTSA_THREADS if set (clamped to >= 1), else hardware concurrency.
inline int thread_count() {
  if (const char* env = std::getenv("NLTSA_THREADS")) {
    int n = std::atoi(env);
    if (n >= 1) return n;
    return 1;
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

/// Runs body(chunk, begin, end) over a deterministic partition of [0, n).
/// Chunk boundaries depend only on n and the worker count, so per-chunk results
/// combined in chunk order are reproducible for a fixed NLTSA_THREADS.
template <typename Body>
void parallel_chunks(Index n, const Body& body) {
  int workers = std::min<Index>(thread_count(), std::max<Index>(n, 1));
  if (workers <= 1 || n < 2) {
    body(0, Index{0}, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int c = 0; c < workers; ++c) {
    Index b = n * c / workers;
    Index e = n * (c + 1) / workers;
    pool.emplace_back([&body, c, b, e] { body(c, b, e); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace nltsa
