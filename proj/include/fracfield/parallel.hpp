#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <thread>
#include <vector>

namespace fracfield {

/// Worker count from FRACFIELD_WORKERS, falling back to 1.
inline int workers_from_env() {
  if (const char* env = std::getenv("FRACFIELD_WORKERS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 1;
}

/// Evaluates fn(0..n-1) on up to `workers` threads and returns the results in
/// index order. The first exception (by index) is rethrown after all workers
/// have joined.
template <class F>
auto parallel_map(std::size_t n, int workers, F&& fn) {
  using R = decltype(fn(std::size_t{0}));
  std::vector<R> out(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto body = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        out[i] = fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto nthreads = static_cast<std::size_t>(std::max(1, workers));
  if (nthreads == 1 || n <= 1) {
    body();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < std::min(nthreads, n); ++t) pool.emplace_back(body);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace fracfield
