#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace pufsim::rng {

// Philox4x32-10 (Salmon et al., "Parallel random numbers: as easy as 1, 2, 3").
// Stateless: the output is a pure function of (key, counter), which is what
// makes population and readout generation independent of scheduling.
using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

inline Counter philox4x32(Counter ctr, Key key) noexcept {
  constexpr std::uint32_t kMul0 = 0xD2511F53u;
  constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
    ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

/// SplitMix64 finalizer; used to derive child seeds from a parent seed.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t tag) noexcept {
  return mix64(mix64(parent) ^ mix64(tag + 0x632BE59BD9B4E019ull));
}

/// Component tags; part of the counter so streams never collide.
enum class Stream : std::uint32_t {
  Global = 1,
  RegionOwn = 2,
  RegionEdge = 3,
  Local = 4,
  Noise = 5,
  Sequence = 6,
};

class CounterRng {
 public:
  explicit constexpr CounterRng(std::uint64_t seed) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  /// Standard normal draw addressed by (a, b, c, stream). Box-Muller on the
  /// two 64-bit halves of one Philox block.
  [[nodiscard]] double normal(std::uint32_t a, std::uint32_t b, std::uint32_t c, Stream s) const noexcept {
    const Counter out = philox4x32({a, b, c, static_cast<std::uint32_t>(s)}, key_);
    const double u1 = to_unit_open(out[0], out[1]);
    const double u2 = to_unit_open(out[2], out[3]);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  [[nodiscard]] Counter block(std::uint32_t a, std::uint32_t b, std::uint32_t c, Stream s) const noexcept {
    return philox4x32({a, b, c, static_cast<std::uint32_t>(s)}, key_);
  }

 private:
  // (0, 1], 53-bit resolution; never returns 0 so log() is safe.
  static double to_unit_open(std::uint32_t hi, std::uint32_t lo) noexcept {
    const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
    return (static_cast<double>(bits) + 1.0) * 0x1.0p-53;
  }

  Key key_;
};

}  // namespace pufsim::rng
