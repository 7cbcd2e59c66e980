#pragma once

#include <algorithm>
#include <thread>
#include <vector>

namespace lipstab {

/// Process-wide worker count used by column-parallel loops; 1 means serial.
int default_threads();
void set_default_threads(int n);

/// Splits [0, n) into contiguous chunks and runs body(begin, end) on each.
/// The body must only touch state that is disjoint between chunks.
template <class Body>
void parallel_for(int n, Body&& body, int threads = default_threads()) {
  threads = std::clamp(threads, 1, std::max(1, n));
  if (threads == 1) {
    body(0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    const int begin = n * t / threads;
    const int end = n * (t + 1) / threads;
    pool.emplace_back([&body, begin, end] { body(begin, end); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace lipstab
