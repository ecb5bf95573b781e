#ifndef MSSFS_PARALLEL_HPP
#define MSSFS_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace mssfs {

// Runs fn(i) for i in [0, n). Each index writes only its own output slot, so
// results are identical for any thread count; any reduction over the outputs
// must be done afterwards in index order.
template <typename Fn>
void parallel_for_index(std::size_t n, int threads, Fn&& fn) {
  if (n == 0) return;
  const int hw = static_cast<int>(std::thread::hardware_concurrency());
  int nthreads = threads > 0 ? threads : std::max(1, hw);
  nthreads = static_cast<int>(std::min<std::size_t>(n, nthreads));

  if (nthreads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error = nullptr;
  std::mutex error_mutex;

  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(nthreads));
  for (int k = 0; k < nthreads; ++k) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace mssfs

#endif  // MSSFS_PARALLEL_HPP
