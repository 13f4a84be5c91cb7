#pragma once

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <string>
#include <thread>
#include <vector>

namespace kite {

inline int thread_cap() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("KITE_THREADS")) {
    long v = std::strtol(env, nullptr, 10);
    if (v >= 1) hw = std::min<unsigned>(hw, static_cast<unsigned>(v));
  }
  return static_cast<int>(hw);
}

// Index-parallel loop. Results must be written to per-index slots by the
// body so the output ordering is independent of scheduling.
inline void parallel_for(int n, const std::function<void(int)>& body) {
  int nthreads = std::min(thread_cap(), n);
  if (nthreads <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> workers;
  workers.reserve(nthreads);
  for (int t = 0; t < nthreads; ++t) {
    workers.emplace_back([&, t]() {
      for (int i = t; i < n; i += nthreads) body(i);
    });
  }
  for (auto& w : workers) w.join();
}

}  // namespace kite
