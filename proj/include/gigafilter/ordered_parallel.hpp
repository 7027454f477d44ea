#pragma once

// Data-parallel map over an index range. Results land in caller-owned slots,
// so the caller reads them back in input order.

#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace gigafilter {

/// Runs fn(i) for every i in [0, n) on up to `workers` threads. If any call
/// throws, the exception from the lowest index is rethrown after all
/// threads have stopped, so the failure reported does not depend on timing.
template <typename Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn) {
  if (n == 0) return;
  if (workers <= 1 || n == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> threads;
    const std::size_t count = std::min<std::size_t>(workers, n);
    threads.reserve(count - 1);
    for (std::size_t t = 1; t < count; ++t) threads.emplace_back(work);
    work();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace gigafilter
