#include "pufsim/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace pufsim::rng {
namespace {

// Known-answer vectors from the Random123 distribution (kat_vectors).
TEST(Philox, KnownAnswerZero) {
  const Counter out = philox4x32({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(out[0], 0x6627e8d5u);
  EXPECT_EQ(out[1], 0xe169c58du);
  EXPECT_EQ(out[2], 0xbc57ac4cu);
  EXPECT_EQ(out[3], 0x9b00dbd8u);
}

TEST(Philox, KnownAnswerOnes) {
  const Counter out = philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
  EXPECT_EQ(out[0], 0x408f276du);
  EXPECT_EQ(out[1], 0x41c83b0eu);
  EXPECT_EQ(out[2], 0xa20bc7c6u);
  EXPECT_EQ(out[3], 0x6d5451fdu);
}

TEST(CounterRng, NormalMoments) {
  const CounterRng rng(7);
  constexpr int kN = 200000;
  double sum = 0.0;
  double sq = 0.0;
  for (int i = 0; i < kN; ++i) {
    const double z = rng.normal(static_cast<std::uint32_t>(i), 0, 0, Stream::Local);
    sum += z;
    sq += z * z;
  }
  const double mean = sum / kN;
  const double var = sq / kN - mean * mean;
  EXPECT_NEAR(mean, 0.0, 4.0 / std::sqrt(kN));
  EXPECT_NEAR(var, 1.0, 4.0 * std::sqrt(2.0 / kN));
}

TEST(CounterRng, StreamsAreAddressable) {
  const CounterRng a(1);
  const CounterRng b(1);
  EXPECT_EQ(a.normal(3, 4, 5, Stream::Noise), b.normal(3, 4, 5, Stream::Noise));
  EXPECT_NE(a.normal(3, 4, 5, Stream::Noise), a.normal(3, 4, 5, Stream::Local));
  EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
}

}  // namespace
}  // namespace pufsim::rng
