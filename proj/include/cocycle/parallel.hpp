#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <type_traits>
#include <vector>

namespace cocycle {

/// Parallel map with results merged by task index, so output never depends on
/// the number of workers. Workers pull indices from a shared counter.
class WorkerPool {
 public:
  explicit WorkerPool(unsigned workers = 1) : workers_(std::max(1u, workers)) {}

  [[nodiscard]] unsigned workers() const { return workers_; }

  template <class F>
  auto map(std::size_t n, F&& f) const -> std::vector<decltype(f(std::size_t{}))> {
    using R = decltype(f(std::size_t{}));
    static_assert(!std::is_same_v<R, bool>, "vector<bool> is not safe for concurrent writes");
    std::vector<R> out(n);
    const unsigned threads = static_cast<unsigned>(std::min<std::size_t>(workers_, n));
    if (threads <= 1) {
      for (std::size_t i = 0; i < n; ++i) out[i] = f(i);
      return out;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          out[i] = f(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    };
    std::vector<std::thread> pool;
    pool.reserve(threads - 1);
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
    return out;
  }

 private:
  unsigned workers_;
};

/// Pool used when a caller does not supply one.
inline const WorkerPool& serial_pool() {
  static const WorkerPool pool(1);
  return pool;
}

}  // namespace cocycle
