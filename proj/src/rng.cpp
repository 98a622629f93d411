#include "maxel/rng.hpp"

#include <boost/random/normal_distribution.hpp>

#include <utility>

namespace maxel {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t stream_key(std::uint64_t seed, const std::vector<std::uint64_t>& path) {
  std::uint64_t h = mix64(seed + kGolden);
  h = mix64(h ^ mix64(static_cast<std::uint64_t>(path.size()) + 0x632BE59BD9B4E019ULL));
  for (std::uint64_t p : path) {
    h = mix64(h + kGolden);
    h = mix64(h ^ mix64(p ^ 0xD1B54A32D192ED03ULL));
  }
  return h;
}

}  // namespace

RngStream::RngStream(std::uint64_t master_seed, std::vector<std::uint64_t> path)
    : master_seed_(master_seed), path_(std::move(path)), state_(stream_key(master_seed_, path_)) {}

std::uint64_t RngStream::below(std::uint64_t bound) {
  // Lemire's multiply-shift with rejection.
  __uint128_t m = static_cast<__uint128_t>(next_u64()) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      m = static_cast<__uint128_t>(next_u64()) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

double RngStream::normal() { return boost::random::normal_distribution<double>{}(*this); }

RngStream RngStream::child(std::uint64_t index) const {
  std::vector<std::uint64_t> p = path_;
  p.push_back(index);
  return RngStream(master_seed_, std::move(p));
}

RngStream derive_stream(std::uint64_t master_seed, std::vector<std::uint64_t> path) {
  return RngStream(master_seed, std::move(path));
}

}  // namespace maxel
