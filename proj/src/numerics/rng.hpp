#pragma once

#include <cstdint>

#include "numerics/matrix.hpp"

namespace reltrace {

// Counter-based generator: a Weyl sequence advanced by a fixed increment and
// passed through the SplitMix64 finalizer. The (seed, stream) pair fixes the
// starting counter, so distinct stream ids give independent sequences and the
// same pair replays the same draws on every run and platform. Never share one
// state across threads; pre-split streams instead.
class RngState {
 public:
  explicit RngState(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  std::uint64_t next_u64();

  // Uniform in [0,1) with 53 random bits.
  double uniform01();

  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t uniform_below(std::uint64_t n);

  // Standard normal via the Marsaglia polar method. Each call consumes one
  // accepted (u,v) pair and discards the pair's second value, so draw
  // sequences do not depend on call grouping.
  double normal();

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
  std::uint64_t counter_ = 0;
};

// n i.i.d. N(0, sigma^2) draws. sigma = 0 still advances the state the same
// way so downstream draws do not shift with the noise scale.
Vec gaussian(RngState& rng, std::size_t n, double sigma);

}  // namespace reltrace
