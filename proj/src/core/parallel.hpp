#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <type_traits>
#include <vector>

#include "rng.hpp"

namespace swapzon {

inline constexpr std::uint64_t kDefaultMasterSeed = 0xC0FFEE;

/// Seeding and parallelism for one simulation job. Results depend only on
/// (master_seed, lane); `threads` changes wall time, never output.
struct SimContext {
  std::uint64_t master_seed = kDefaultMasterSeed;
  std::uint64_t lane = 0;
  unsigned threads = 1;

  [[nodiscard]] SimContext derive(std::uint64_t tag) const {
    return {master_seed, derive_lane(lane, tag), threads};
  }
  [[nodiscard]] Stream stream(std::uint64_t replicate) const {
    return Stream({master_seed, lane, replicate});
  }
};

// Purpose tags for sub-lanes. Fixed values: changing one changes outputs.
namespace lane_tag {
inline constexpr std::uint64_t kDraws = 1;
inline constexpr std::uint64_t kResample = 2;
inline constexpr std::uint64_t kDirections = 3;
inline constexpr std::uint64_t kPrepass = 4;
inline constexpr std::uint64_t kPermutations = 5;
}  // namespace lane_tag

/// Runs fn(i) for i in [0, count) over contiguous chunks on `threads` threads.
template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(threads, count));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (count + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&, begin, end] {
      try {
        for (std::size_t i = begin; i < end; ++i) fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

/// Maps replicate index -> fn(index, stream) with one stream per replicate.
template <class Fn>
auto simulate(std::size_t count, const SimContext& ctx, Fn&& fn) {
  using Result = std::invoke_result_t<Fn&, std::size_t, Stream&>;
  std::vector<Result> out(count);
  parallel_for(count, ctx.threads, [&](std::size_t i) {
    Stream stream = ctx.stream(i);
    out[i] = fn(i, stream);
  });
  return out;
}

}  // namespace swapzon
