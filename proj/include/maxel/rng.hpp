#pragma once

#include <cstdint>
#include <limits>
#include <vector>

namespace maxel {

/// Deterministic random stream identified by a master seed and a path of
/// indices (for example `{rep, draw}`).
///
/// The stream key is a splitmix64 hash of the seed, the path length and every
/// path element; outputs are the splitmix64 sequence started at that key. No
/// state is shared between streams, so two streams with the same
/// (seed, path) always agree and streams can be consumed on any thread in any
/// order.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t master_seed, std::vector<std::uint64_t> path);

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
  result_type operator()() { return next_u64(); }
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  /// Uniform on (0, 1).
  double uniform_open() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }
  /// Unbiased integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);
  /// Standard normal (Boost ziggurat driven by this stream).
  double normal();

  /// Stream at path() + {index}.
  RngStream child(std::uint64_t index) const;

  std::uint64_t master_seed() const { return master_seed_; }
  const std::vector<std::uint64_t>& path() const { return path_; }

 private:
  std::uint64_t master_seed_;
  std::vector<std::uint64_t> path_;
  std::uint64_t state_;
};

RngStream derive_stream(std::uint64_t master_seed, std::vector<std::uint64_t> path);

}  // namespace maxel
