#include "fredholm/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fredholm {

int thread_budget() {
  static const int budget = [] {
    if (const char* env = std::getenv("FREDHOLM_THREADS")) {
      const int n = std::atoi(env);
      if (n >= 1) return n;
      return 1;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
  }();
  return budget;
}

void parallel_for(int begin, int end, const std::function<void(int)>& body) {
  if (end <= begin) return;
  const int n = std::min(thread_budget(), end - begin);
  if (n <= 1) {
    for (int i = begin; i < end; ++i) body(i);
    return;
  }
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(n)
  for (int i = begin; i < end; ++i) body(i);
#else
  std::vector<std::thread> workers;
  workers.reserve(n);
  const int total = end - begin;
  for (int t = 0; t < n; ++t) {
    const int lo = begin + static_cast<int>(static_cast<long long>(total) * t / n);
    const int hi = begin + static_cast<int>(static_cast<long long>(total) * (t + 1) / n);
    workers.emplace_back([lo, hi, &body] {
      for (int i = lo; i < hi; ++i) body(i);
    });
  }
  for (auto& w : workers) w.join();
#endif
}

}  // namespace fredholm
