#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace rieszlab {

/// Worker cap shared by all node-parallel loops. Defaults to 1.
void set_thread_count(int threads);
int thread_count();

/// Runs body(begin, end) over contiguous chunks of [0, n). Chunks write
/// disjoint outputs, so results do not depend on the worker count.
template <typename Body>
void parallel_for(std::size_t n, Body&& body) {
  const auto workers = static_cast<std::size_t>(std::max(1, thread_count()));
  if (workers == 1 || n < 2 * workers) {
    body(std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t b = w * chunk;
    const std::size_t e = std::min(n, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&body, b, e] { body(b, e); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace rieszlab
