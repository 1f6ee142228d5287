#pragma once

#include "lssid/linalg.hpp"

#include <cstdint>

namespace lssid {

/// Counter-based generator: draw i of stream k is splitmix64(key_k + i * gamma)
/// with key_k derived from (seed, k). Independent streams let the mode, input
/// and noise sequences stay fixed when another stream's distribution changes.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64() noexcept;
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  /// Standard normal by Box-Muller; the second variate of each pair is cached.
  double normal() noexcept;
  /// Index in {1..p.size()} drawn with probabilities p.
  int categorical(const Vector& p) noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64_mix(std::uint64_t z) noexcept;

}  // namespace lssid
