#pragma once

#include <algorithm>
#include <cstdint>
#include <thread>
#include <vector>

namespace anb::detail {

inline unsigned worker_count(unsigned jobs, std::uint64_t items) {
  unsigned n = jobs != 0 ? jobs : std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::min<std::uint64_t>(n, std::max<std::uint64_t>(items, 1)));
}

// Sums fn(i) over i in [0, n). Items go round-robin to workers; T must be
// summable with += in any order.
template <class T, class Fn>
T parallel_sum(std::uint64_t n, unsigned jobs, Fn&& fn) {
  const unsigned workers = worker_count(jobs, n);
  std::vector<T> partial(workers);
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::uint64_t i = w; i < n; i += workers) partial[w] += fn(i);
      });
    }
  }
  T total{};
  for (const T& p : partial) total += p;
  return total;
}

}  // namespace anb::detail
