#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace bubbletower {

// Worker count from BUBBLETOWER_WORKERS, falling back to the hardware count.
inline unsigned worker_count_from_env() {
  if (const char* env = std::getenv("BUBBLETOWER_WORKERS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return static_cast<unsigned>(n);
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// Evaluates f(0..n-1) on a small pool; results keep index order, and the
// first exception (by index) is rethrown.
template <class R, class F>
std::vector<R> parallel_map(std::size_t n, unsigned workers, F&& f) {
  std::vector<R> out(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto run = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        out[i] = f(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned used = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n)));
  if (used == 1) {
    run();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < used; ++w) pool.emplace_back(run);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace bubbletower
