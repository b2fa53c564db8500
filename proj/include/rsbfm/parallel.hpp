#pragma once
// Static-chunk parallel map over an index range. Work items draw from
// per-index RNG substreams and write disjoint slots, so the result is
// bitwise-independent of the thread count.
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace rsbfm {

inline void parallel_for(int count, int n_threads,
                         const std::function<void(int)>& body) {
  if (count <= 0) return;
  if (n_threads <= 1 || count == 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  int workers = std::min(n_threads, count);
  std::vector<std::thread> pool;
  std::exception_ptr first_error = nullptr;
  std::mutex err_mutex;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      try {
        for (int i = w; i < count; i += workers) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace rsbfm
