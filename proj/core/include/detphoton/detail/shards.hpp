#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace detphoton {

template <typename Fn>
void for_each_shard(std::uint64_t shards, unsigned workers, Fn&& fn) {
  if (shards == 0) return;
  const unsigned n_threads =
      static_cast<unsigned>(std::min<std::uint64_t>(std::max(workers, 1u), shards));
  if (n_threads == 1) {
    for (std::uint64_t k = 0; k < shards; ++k) fn(k);
    return;
  }
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  for (unsigned t = 0; t < n_threads; ++t) {
    pool.emplace_back([&] {
      for (std::uint64_t k = next++; k < shards; k = next++) {
        try {
          fn(k);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = shards;
        }
      }
    });
  }
  for (std::thread& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace detphoton
