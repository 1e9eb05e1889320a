// Static-partition parallel loop. Work items are split into contiguous
// index ranges so results can be written to preallocated slots and reduced
// in index order afterwards, which keeps outputs independent of the thread
// count.

#ifndef INVPOSE_PARALLEL_HPP
#define INVPOSE_PARALLEL_HPP

#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace invpose {

inline int hardware_threads() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

/// Runs fn(i) for i in [0, n). `n_threads <= 1` executes inline. The first
/// exception thrown by any worker is rethrown on the calling thread.
inline void parallel_for(int n, int n_threads, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  n_threads = std::min(n_threads, n);
  if (n_threads <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }

  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_threads));
  workers.reserve(static_cast<std::size_t>(n_threads));
  for (int w = 0; w < n_threads; ++w) {
    const int lo = static_cast<int>(static_cast<long long>(n) * w / n_threads);
    const int hi = static_cast<int>(static_cast<long long>(n) * (w + 1) / n_threads);
    workers.emplace_back([&fn, &errors, w, lo, hi] {
      try {
        for (int i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : workers) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace invpose

#endif  // INVPOSE_PARALLEL_HPP
