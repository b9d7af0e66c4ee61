#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace poco {

/// Deterministic stream RNG behind every synthetic fixture.
///
/// Algorithm: xoshiro256++ with its four state words drawn from a splitmix64
/// sequence started at the stream seed. Substreams remix the *root* seed with
/// an FNV-1a hash of a label (plus an optional index), so a child stream
/// depends only on (root seed, label, index) and never on how much the parent
/// has already drawn. Uniform doubles take the top 53 bits of one output;
/// gaussians are Box-Muller pairs with the second value cached.
class Rng {
 public:
  static constexpr std::string_view kAlgorithm = "xoshiro256++/splitmix64";

  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  /// Uniform in [0, 1).
  double next_double();

  /// Uniform in [lo, hi).
  double next_uniform(double lo, double hi);

  /// Standard normal.
  double next_gaussian();

  /// Uniform integer in [0, bound), bound > 0. Rejection-free modulo is fine
  /// here: bounds in this codebase are tiny relative to 2^64.
  std::uint64_t next_below(std::uint64_t bound);

  Rng substream(std::string_view label) const;
  Rng substream(std::string_view label, std::uint64_t index) const;

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_ = 0;
  std::array<std::uint64_t, 4> state_{};
  double cached_gaussian_ = 0.0;
  bool has_cached_gaussian_ = false;
};

}  // namespace poco
