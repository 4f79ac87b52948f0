#include "pufsim/randomness.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <string>

#include "pufsim/error.hpp"
#include "pufsim/population.hpp"
#include "pufsim/signature.hpp"

namespace pufsim::nist {
namespace {

constexpr TestOptions kFixture{kDefaultAlpha, 128, true};

// SP 800-22 longest-run worked example, 128 bits.
constexpr const char* kLongestRunExample =
    "11001100000101010110110001001100111000000000001001001101010100010001001111010110100000001101011111001100111001101101100010110010";

BitSequence constant(std::size_t n, std::uint8_t v) { return BitSequence(std::vector<std::uint8_t>(n, v)); }

BitSequence alternating(std::size_t n) {
  std::vector<std::uint8_t> b(n);
  for (std::size_t i = 0; i < n; ++i) b[i] = static_cast<std::uint8_t>(i % 2);
  return BitSequence(std::move(b));
}

/// Unbiased zero-noise power-up bits of a simulated population, concatenated.
BitSequence simulated_bits(std::size_t n, std::uint64_t seed) {
  PopulationSpec spec;
  spec.cells_per_device = 64;
  spec.num_devices = (n + 63) / 64;
  spec.sigma_mismatch = 0.25;
  spec.weights = {0.0, 0.0, 1.0};
  spec.placement = make_independent_placement(8, 8);
  spec.master_seed = seed;
  const SignatureSet s = read_signatures(generate_population(spec), {{}, 1, 0, noiseless_calibration(0.25)});
  std::vector<std::uint8_t> bits;
  bits.reserve(n);
  for (std::size_t d = 0; d < s.devices() && bits.size() < n; ++d) {
    for (std::size_t p = 0; p < 64 && bits.size() < n; ++p) bits.push_back(s.bit(d, 0, p) ? 1 : 0);
  }
  return BitSequence(std::move(bits));
}

// Reference values evaluated independently (scipy erfc / gammaincc / normal cdf / numpy fft).
TEST(Fixtures, WorkedExamples) {
  EXPECT_NEAR(frequency_test(BitSequence::from_string("1011010101"), kFixture).p_values[0], 0.527089, 5e-7);
  TestOptions m3 = kFixture;
  m3.block_size = 3;
  EXPECT_NEAR(block_frequency_test(BitSequence::from_string("0110011010"), m3).p_values[0], 0.801252, 5e-7);
  const double cusum =
      cumulative_sums_test(BitSequence::from_string("1011010111"), ScanMode::Forward, kFixture).p_values[0];
  EXPECT_NEAR(cusum, 0.4116586191538023, 1e-10);
  EXPECT_NEAR(cusum, 0.4116588, 5e-7);
  EXPECT_NEAR(runs_test(BitSequence::from_string("1001101011"), kFixture).p_values[0], 0.147232, 5e-7);
  EXPECT_NEAR(longest_run_test(BitSequence::from_string(kLongestRunExample), kFixture).p_values[0], 0.180609, 5e-7);
  // All five magnitudes (0, 2, 4.47, 2, 4.47) sit below T = 5.47, so N1 = 5.
  EXPECT_NEAR(dft_test(BitSequence::from_string("1001010011"), kFixture).p_values[0], 0.4681599098544281, 1e-12);
}

TEST(Frequency, Extremes) {
  const TestResult zeros = frequency_test(constant(1000000, 0));
  EXPECT_LT(zeros.p_values[0], 1e-6);
  EXPECT_FALSE(zeros.pass);
  const TestResult alt = frequency_test(alternating(1000));
  EXPECT_EQ(alt.p_values[0], 1.0);
  EXPECT_TRUE(alt.pass);
}

TEST(BlockFrequency, Extremes) {
  TestOptions opts;
  opts.block_size = 20;
  EXPECT_EQ(block_frequency_test(alternating(1000), opts).p_values[0], 1.0);
  EXPECT_LT(block_frequency_test(constant(1000, 1), opts).p_values[0], 1e-6);
  opts.block_size = 10;
  EXPECT_THROW(block_frequency_test(alternating(1000), opts), Error);
  opts.block_size = 2000;
  EXPECT_THROW(block_frequency_test(alternating(1000), opts), Error);
}

TEST(CumulativeSums, Extremes) {
  const TestResult alt = cumulative_sums_test(alternating(10000), ScanMode::Forward);
  EXPECT_GT(alt.p_values[0], 0.99);
  for (ScanMode mode : {ScanMode::Forward, ScanMode::Backward}) {
    EXPECT_LT(cumulative_sums_test(constant(1000, 1), mode).p_values[0], 1e-6);
    EXPECT_LT(cumulative_sums_test(constant(1000, 0), mode).p_values[0], 1e-6);
  }
  const BitSequence s = BitSequence::from_string("1011010111");
  EXPECT_EQ(cumulative_sums_test(s, ScanMode::Backward, kFixture).test, TestId::CumulativeSumsBackward);
}

TEST(Runs, Extremes) {
  const TestResult ones = runs_test(constant(1000, 1));
  EXPECT_EQ(ones.p_values[0], 0.0);
  EXPECT_FALSE(ones.pass);
  EXPECT_LT(runs_test(constant(1000, 0)).p_values[0], 1e-6);
  EXPECT_FALSE(runs_test(alternating(1000)).pass);
}

TEST(LongestRun, Extremes) {
  EXPECT_FALSE(longest_run_test(constant(128, 0)).pass);
  // 16 blocks of 8 with longest-run classes {<=1: 3, 2: 6, 3: 4, >=4: 3},
  // the integer counts closest to 16 * {0.2148, 0.3672, 0.2305, 0.1875}.
  std::string text;
  for (int i = 0; i < 3; ++i) text += "01001000";
  for (int i = 0; i < 6; ++i) text += "11000100";
  for (int i = 0; i < 4; ++i) text += "11100010";
  for (int i = 0; i < 3; ++i) text += "11110000";
  EXPECT_GE(longest_run_test(BitSequence::from_string(text)).p_values[0], 0.9);
  EXPECT_THROW(longest_run_test(constant(127, 0), kFixture), Error);
}

TEST(Rank, Gf2RankBasics) {
  std::array<std::uint32_t, 32> rows{};
  EXPECT_EQ(gf2_rank(rows), 0);
  for (int i = 0; i < 32; ++i) rows[static_cast<std::size_t>(i)] = 1u << i;
  EXPECT_EQ(gf2_rank(rows), 32);
  rows[5] = rows[3] ^ rows[7];
  EXPECT_EQ(gf2_rank(rows), 31);
  EXPECT_NEAR(rank_probability(32), 0.2888, 1e-4);
  EXPECT_NEAR(rank_probability(31), 0.5776, 1e-4);
  EXPECT_NEAR(1.0 - rank_probability(32) - rank_probability(31), 0.1336, 1e-4);
}

TEST(Rank, DegenerateInputsFail) {
  std::vector<std::uint8_t> identity;
  for (int m = 0; m < 40; ++m) {
    for (int i = 0; i < 32; ++i) {
      for (int j = 0; j < 32; ++j) identity.push_back(i == j ? 1 : 0);
    }
  }
  EXPECT_FALSE(rank_test(BitSequence(identity)).pass);
  EXPECT_FALSE(rank_test(constant(40960, 0)).pass);
  EXPECT_THROW(rank_test(constant(20000, 0)), Error);
}

TEST(Rank, SimulatedBitsPass) {
  int passes = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) passes += rank_test(simulated_bits(100000, 1000 + seed)).pass;
  EXPECT_GE(passes, 99);
}

TEST(Dft, SquareWaveFails) {
  std::vector<std::uint8_t> b(4096);
  for (std::size_t i = 0; i < b.size(); ++i) b[i] = (i / 4) % 2;
  EXPECT_FALSE(dft_test(BitSequence(b)).pass);
}

TEST(Dft, MillionSimulatedBitsPass) {
  const TestResult r = dft_test(simulated_bits(1000000, 77));
  EXPECT_GE(r.p_values[0], 0.001);
}

TEST(Dft, MatchesNaiveTransform) {
  // O(n^2) DFT evaluated directly, as an oracle for the FFT path.
  std::mt19937_64 gen(3);
  for (std::size_t n : {100u, 1001u, 1500u}) {
    std::vector<std::uint8_t> b(n);
    for (auto& x : b) x = gen() & 1;
    const double threshold = std::sqrt(std::log(20.0) * static_cast<double>(n));
    std::size_t below = 0;
    for (std::size_t k = 0; k < n / 2; ++k) {
      double re = 0, im = 0;
      for (std::size_t j = 0; j < n; ++j) {
        const double x = b[j] ? 1.0 : -1.0;
        const double ang = -2.0 * M_PI * static_cast<double>(k * j % n) / static_cast<double>(n);
        re += x * std::cos(ang);
        im += x * std::sin(ang);
      }
      below += std::hypot(re, im) < threshold;
    }
    const double d = (static_cast<double>(below) - 0.95 * n / 2.0) / std::sqrt(n * 0.95 * 0.05 / 4.0);
    EXPECT_NEAR(dft_test(BitSequence(b), kFixture).p_values[0], std::erfc(std::abs(d) / std::sqrt(2.0)), 1e-12);
  }
}

TEST(Suite, InsufficientLengthIsReportedOrSkipped) {
  const BitSequence s = BitSequence::from_string("1011010101");
  try {
    frequency_test(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InsufficientLength);
  }
  const auto results = run_suite(simulated_bits(1024, 5), kAllTests);
  EXPECT_EQ(results.size(), 7u);  // Rank skipped below 38912 bits
  EXPECT_EQ(run_suite(simulated_bits(1024, 5), kAllTests, kFixture).size(), 8u);
}

TEST(Suite, PValuesInUnitIntervalAndDeterministic) {
  std::mt19937_64 gen(11);
  for (int iter = 0; iter < 30; ++iter) {
    std::vector<std::uint8_t> b(2000 + gen() % 3000);
    const double p1 = (gen() % 100) / 100.0;
    std::bernoulli_distribution bit(p1);
    for (auto& x : b) x = bit(gen);
    const BitSequence seq(b);
    const auto a = run_suite(seq, kAllTests, kFixture);
    const auto again = run_suite(seq, kAllTests, kFixture);
    ASSERT_EQ(a.size(), again.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      for (double p : a[i].p_values) {
        EXPECT_GE(p, 0.0);
        EXPECT_LE(p, 1.0);
      }
      EXPECT_EQ(a[i].p_values, again[i].p_values);
    }
  }
}

TEST(Aggregate, PassCountsAndUniformity) {
  std::vector<std::vector<TestResult>> all_one(10, {TestResult{TestId::Frequency, {1.0}, true}});
  const SuiteAggregate a = aggregate_suite(all_one);
  EXPECT_EQ(a.at(TestId::Frequency).passing, 10u);
  EXPECT_EQ(a.at(TestId::Frequency).total, 10u);
  EXPECT_LT(a.at(TestId::Frequency).uniformity_p, 1e-6);

  std::vector<std::vector<TestResult>> uniform;
  for (int i = 0; i < 10; ++i) uniform.push_back({TestResult{TestId::Runs, {0.05 + 0.1 * i}, true}});
  const SuiteAggregate u = aggregate_suite(uniform);
  EXPECT_EQ(u.at(TestId::Runs).uniformity_p, 1.0);
  for (auto b : u.at(TestId::Runs).bins) EXPECT_EQ(b, 1u);

  std::vector<std::vector<TestResult>> mixed{{TestResult{TestId::Rank, {0.0005}, false}},
                                              {TestResult{TestId::Rank, {0.5}, true}}};
  EXPECT_EQ(aggregate_suite(mixed).at(TestId::Rank).passing, 1u);
  EXPECT_THROW(aggregate_suite(std::span(mixed).first(1)), Error);
}

TEST(BitSequence, Parsing) {
  EXPECT_EQ(BitSequence::from_string("10 1\n1").size(), 4u);
  EXPECT_THROW(BitSequence::from_string("10x"), Error);
  BitVector v(70);
  v.set(0, true);
  v.set(69, true);
  const BitSequence s = BitSequence::from_words(v.words(), 70);
  EXPECT_EQ(s[0], 1);
  EXPECT_EQ(s[69], 1);
  EXPECT_EQ(s[1], 0);
  EXPECT_EQ(test_from_name("CumulativeSums-S2"), TestId::CumulativeSumsBackward);
  EXPECT_THROW(test_from_name("Serial"), Error);
}

}  // namespace
}  // namespace pufsim::nist
