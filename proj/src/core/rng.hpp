#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace swapzon {

/// Philox4x32-10 block function (Salmon et al., counter-based RNG).
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key);

/// Identifies one random stream. Streams with different keys never overlap.
struct StreamKey {
  std::uint64_t master_seed = 0;
  std::uint64_t lane = 0;       // experiment / purpose
  std::uint64_t replicate = 0;  // replicate index within the lane
};

/// Mixes a parent lane and a tag into a child lane.
std::uint64_t derive_lane(std::uint64_t lane, std::uint64_t tag);

// Counter-based random stream. Every replicate gets its own stream, so the
// draws of replicate r do not depend on how replicates are scheduled.
class Stream {
 public:
  explicit Stream(StreamKey key);

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on (0, 1).
  double uniform_open();
  double normal();
  double exponential();
  /// Uniform integer in [0, n). n > 0.
  std::uint64_t below(std::uint64_t n);
  /// Index drawn from a discrete distribution given by (unnormalized) probs.
  std::size_t discrete(std::span<const double> probs);

 private:
  void refill();

  std::array<std::uint32_t, 2> key_{};
  std::array<std::uint32_t, 4> counter_{};
  std::array<std::uint32_t, 4> block_{};
  int pos_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace swapzon
