#pragma once

#include <atomic>
#include <cstdint>
#include <thread>
#include <vector>

namespace orperc {

inline int resolve_threads(int threads) {
  if (threads > 0) return threads;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs fn(r, state, acc) for every replica index r in [0, reps),
// accumulating into per-block accumulators of a fixed block size and merging
// them in block order.  The result is identical for any thread count or
// schedule: blocks are keyed by replica index, not by worker.
//
// Acc needs a default constructor and void merge(const Acc&).  Each worker
// owns one State built by make_state(), so replicas can reuse large search
// scratch without sharing it across threads.
template <class Acc, class MakeState, class Fn>
Acc parallel_replicas_with_state(std::int64_t reps, int threads, MakeState&& make_state,
                                 Fn&& fn) {
  constexpr std::int64_t kBlock = 1024;
  Acc total;
  if (reps <= 0) return total;
  const std::int64_t nblocks = (reps + kBlock - 1) / kBlock;
  const int nthreads =
      static_cast<int>(std::min<std::int64_t>(resolve_threads(threads), nblocks));

  std::vector<Acc> block_acc(static_cast<std::size_t>(nblocks));
  std::atomic<std::int64_t> next{0};
  auto worker = [&] {
    auto state = make_state();
    for (;;) {
      const std::int64_t b = next.fetch_add(1, std::memory_order_relaxed);
      if (b >= nblocks) return;
      Acc acc;
      const std::int64_t lo = b * kBlock;
      const std::int64_t hi = std::min(reps, lo + kBlock);
      for (std::int64_t r = lo; r < hi; ++r) fn(r, state, acc);
      block_acc[static_cast<std::size_t>(b)] = std::move(acc);
    }
  };

  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(nthreads));
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& a : block_acc) total.merge(a);
  return total;
}

struct NoState {};

template <class Acc, class Fn>
Acc parallel_replicas(std::int64_t reps, int threads, Fn&& fn) {
  return parallel_replicas_with_state<Acc>(
      reps, threads, [] { return NoState{}; },
      [&fn](std::int64_t r, NoState&, Acc& acc) { fn(r, acc); });
}

}  // namespace orperc
