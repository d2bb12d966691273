#pragma once

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace waveband {

// Worker count: hardware concurrency, capped by WAVEBAND_THREADS when set.
inline unsigned worker_count() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("WAVEBAND_THREADS")) {
    try {
      const long cap = std::stol(env);
      if (cap >= 1) hw = std::min<unsigned>(hw, unsigned(cap));
    } catch (const std::exception&) {
    }
  }
  return hw;
}

// Runs body(i) for i in [0, count). Each index is visited exactly once and
// writes only its own output, so results do not depend on the thread count.
template <class Body>
void parallel_for(int count, Body&& body) {
  const unsigned workers = std::min<unsigned>(worker_count(), unsigned(std::max(count, 1)));
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (int i = int(w); i < count; i += int(workers)) body(i);
    });
  for (auto& t : pool) t.join();
}

}  // namespace waveband
