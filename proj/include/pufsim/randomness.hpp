#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pufsim/bits.hpp"

namespace pufsim::nist {

/// A bit sequence under test, unpacked to one byte per bit (0 or 1).
class BitSequence {
 public:
  BitSequence() = default;
  explicit BitSequence(std::vector<std::uint8_t> bits);
  /// From '0'/'1' characters; any other character except whitespace is rejected.
  static BitSequence from_string(std::string_view text);
  /// First n bits of packed words, least-significant bit first.
  static BitSequence from_words(std::span<const Word> words, std::size_t n);

  [[nodiscard]] std::size_t size() const noexcept { return bits_.size(); }
  [[nodiscard]] std::uint8_t operator[](std::size_t i) const noexcept { return bits_[i]; }
  [[nodiscard]] std::span<const std::uint8_t> bits() const noexcept { return bits_; }

 private:
  std::vector<std::uint8_t> bits_;
};

inline constexpr double kDefaultAlpha = 0.001;

struct TestOptions {
  double alpha = kDefaultAlpha;
  /// Block length for the block-frequency test.
  std::size_t block_size = 128;
  /// Disables the recommended minimum lengths (and the block-frequency
  /// M >= 20 rule) so short published worked examples can be evaluated.
  bool fixture_mode = false;
};

enum class TestId { Frequency, BlockFrequency, CumulativeSumsForward, CumulativeSumsBackward, Runs, LongestRun, Rank, Fft };

inline constexpr TestId kAllTests[] = {TestId::Frequency, TestId::BlockFrequency, TestId::CumulativeSumsForward,
                                       TestId::CumulativeSumsBackward, TestId::Runs, TestId::LongestRun,
                                       TestId::Rank, TestId::Fft};

std::string_view test_name(TestId id) noexcept;
TestId test_from_name(std::string_view name);
/// Recommended minimum sequence length.
std::size_t minimum_length(TestId id) noexcept;

struct TestResult {
  TestId test = TestId::Frequency;
  std::vector<double> p_values;
  bool pass = false;
};

enum class ScanMode { Forward, Backward };

TestResult frequency_test(const BitSequence& seq, const TestOptions& options = {});
TestResult block_frequency_test(const BitSequence& seq, const TestOptions& options = {});
TestResult cumulative_sums_test(const BitSequence& seq, ScanMode mode, const TestOptions& options = {});
TestResult runs_test(const BitSequence& seq, const TestOptions& options = {});
TestResult longest_run_test(const BitSequence& seq, const TestOptions& options = {});
TestResult rank_test(const BitSequence& seq, const TestOptions& options = {});
TestResult dft_test(const BitSequence& seq, const TestOptions& options = {});

TestResult run_test(TestId id, const BitSequence& seq, const TestOptions& options = {});

/// Runs the selected tests; tests whose minimum length is not met are
/// skipped (absent from the result) unless fixture mode is on.
std::vector<TestResult> run_suite(const BitSequence& seq, std::span<const TestId> tests, const TestOptions& options = {});

/// GF(2) rank of a 32x32 matrix given as 32 row words.
int gf2_rank(std::span<const std::uint32_t, 32> rows) noexcept;
/// Probability that a random 32x32 GF(2) matrix has rank r.
double rank_probability(int r) noexcept;

struct TestAggregate {
  std::size_t passing = 0;
  std::size_t total = 0;
  double uniformity_p = 0.0;
  std::array<std::size_t, 10> bins{};
};

using SuiteAggregate = std::map<TestId, TestAggregate>;

/// Second-level summary over N sequences: pass proportion and the chi-square
/// uniformity p-value of the p-values over ten equal bins.
SuiteAggregate aggregate_suite(std::span<const std::vector<TestResult>> per_sequence, double alpha = kDefaultAlpha);

}  // namespace pufsim::nist
