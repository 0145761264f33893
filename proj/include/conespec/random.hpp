#pragma once

#include <cstdint>

#include "conespec/core.hpp"

namespace conespec {

/// Counter-based generator: output k of stream s under seed is
/// mix(key(seed, s) + (k + 1) * golden), where mix is the splitmix64 finalizer.
/// Streams are independent of evaluation order, so campaigns can fan out.
class CounterRng {
 public:
  static constexpr const char* kAlgorithm = "splitmix64-ctr-v1";

  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  /// Standard normal via Box-Muller.
  double normal();
  /// Independent generator for sub-task `index`.
  CounterRng substream(std::uint64_t index) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t splitmix64_mix(std::uint64_t z);

}  // namespace conespec
