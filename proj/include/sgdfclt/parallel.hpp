#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace sgdfclt {

namespace detail {
inline std::atomic<unsigned>& default_thread_slot() {
  static std::atomic<unsigned> slot{0};
  return slot;
}
}  // namespace detail

/// Worker count used when a caller passes threads == 0. Zero means
/// hardware concurrency.
inline void set_default_threads(unsigned n) { detail::default_thread_slot().store(n); }

inline unsigned resolve_threads(unsigned requested) {
  unsigned n = requested != 0 ? requested : detail::default_thread_slot().load();
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return n;
}

/// Runs body(i) for i in [0, count). Each index writes only its own output
/// slot, so results do not depend on the schedule. If several indices throw,
/// the exception of the smallest index is rethrown.
template <class Body>
void parallel_for(std::size_t count, unsigned threads, Body&& body) {
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(resolve_threads(threads), count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  std::size_t error_index = count;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
          try {
            body(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (i < error_index) {
              error_index = i;
              error = std::current_exception();
            }
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace sgdfclt
