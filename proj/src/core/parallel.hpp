#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace trapsim {

// Trials are grouped into fixed-size blocks whose boundaries depend only on the
// trial count. Each block produces a partial result, and callers reduce the
// partials in block order, so floating-point sums come out bit-identical for
// any thread count.
inline constexpr std::uint64_t kTrialBlockSize = 4096;

inline std::size_t block_count(std::uint64_t trials) {
  return static_cast<std::size_t>((trials + kTrialBlockSize - 1) / kTrialBlockSize);
}

// Runs body(block_index, first_trial, end_trial) for every block. Blocks are
// claimed dynamically by up to `threads` workers.
template <class Body>
void for_each_block(std::uint64_t trials, unsigned threads, Body&& body) {
  const std::size_t blocks = block_count(trials);
  auto run_block = [&](std::size_t b) {
    const std::uint64_t first = static_cast<std::uint64_t>(b) * kTrialBlockSize;
    const std::uint64_t last = std::min<std::uint64_t>(trials, first + kTrialBlockSize);
    body(b, first, last);
  };
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), blocks));
  if (workers <= 1) {
    for (std::size_t b = 0; b < blocks; ++b) run_block(b);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      try {
        for (std::size_t b = next++; b < blocks; b = next++) run_block(b);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace trapsim
