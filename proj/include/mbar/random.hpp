#pragma once

#include <cstdint>
#include <limits>

namespace mbar {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed for stream `index` under `master_seed`. Streams for different indices
/// are decorrelated, so work can be split across threads without changing the
/// numbers any index sees.
constexpr std::uint64_t stream_seed(std::uint64_t master_seed, std::uint64_t index) noexcept {
  return mix64(mix64(master_seed ^ 0x6a09e667f3bcc909ULL) + mix64(index + 0x9e3779b97f4a7c15ULL));
}

/// SplitMix64 generator; satisfies UniformRandomBitGenerator so it plugs into
/// the <random> distributions. Cheap to construct, which is what makes one
/// engine per Monte-Carlo trial affordable.
class StreamEngine {
 public:
  using result_type = std::uint64_t;

  explicit constexpr StreamEngine(std::uint64_t seed) noexcept : state_(seed) {}
  constexpr StreamEngine(std::uint64_t master_seed, std::uint64_t index) noexcept
      : state_(stream_seed(master_seed, index)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

 private:
  std::uint64_t state_;
};

}  // namespace mbar
