// Deterministic fork-join helper. Work items write to disjoint slots, so the
// result never depends on the thread count.
#pragma once

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace attrprop {

inline int default_thread_count() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

template <typename Fn>
void parallel_for(int n, int threads, Fn&& fn) {
  if (n <= 0) {
    return;
  }
  if (threads <= 1 || n == 1) {
    for (int i = 0; i < n; ++i) {
      fn(i);
    }
    return;
  }
  const int workers = std::min(threads, n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::exception_ptr first_error;
  std::mutex error_mutex;
  for (int t = 0; t < workers; ++t) {
    const int begin = static_cast<int>(static_cast<long long>(n) * t / workers);
    const int end = static_cast<int>(static_cast<long long>(n) * (t + 1) / workers);
    pool.emplace_back([&, begin, end] {
      try {
        for (int i = begin; i < end; ++i) {
          fn(i);
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) {
          first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) {
    th.join();
  }
  if (first_error) {
    std::rethrow_exception(first_error);
  }
}

}  // namespace attrprop
