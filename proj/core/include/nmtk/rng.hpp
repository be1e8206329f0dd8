#pragma once

#include <cstdint>

namespace nmtk {

/// Seeded generator with a platform-independent output stream.
///
/// std::uniform_*_distribution is implementation-defined, so all sampling in
/// the toolkit goes through these helpers instead. The engine is
/// xoshiro256** seeded through splitmix64.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform();
  /// Uniform integer in [0, n). `n` must be positive.
  std::uint64_t below(std::uint64_t n);

 private:
  std::uint64_t s_[4];
};

/// Derives an independent stream seed for item `index` of a run seeded with
/// `seed`, so per-item randomness does not depend on scheduling.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace nmtk
