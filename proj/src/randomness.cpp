#include "pufsim/randomness.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <string>

#include "pufsim/error.hpp"
#include "pufsim/special.hpp"

namespace pufsim::nist {
namespace {

void require_length(const BitSequence& seq, TestId id, const TestOptions& options, std::size_t hard_minimum) {
  const std::size_t needed = options.fixture_mode ? hard_minimum : std::max(hard_minimum, minimum_length(id));
  if (seq.size() < needed) {
    fail(ErrorKind::InsufficientLength, std::string(test_name(id)) + " needs at least " + std::to_string(needed) +
                                            " bits, got " + std::to_string(seq.size()));
  }
}

TestResult finish(TestId id, std::vector<double> p_values, double alpha) {
  for (double& p : p_values) p = std::clamp(p, 0.0, 1.0);
  const bool pass = std::all_of(p_values.begin(), p_values.end(), [&](double p) { return p >= alpha; });
  return {id, std::move(p_values), pass};
}

double chi_square(std::span<const std::size_t> observed, std::span<const double> probabilities, double total) {
  double chi2 = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double expected = total * probabilities[i];
    const double diff = static_cast<double>(observed[i]) - expected;
    chi2 += diff * diff / expected;
  }
  return chi2;
}

// FFTW's planner is not re-entrant.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

BitSequence::BitSequence(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
  for (auto b : bits_) {
    if (b > 1) fail(ErrorKind::InvalidArgument, "bit sequence values must be 0 or 1");
  }
}

BitSequence BitSequence::from_string(std::string_view text) {
  std::vector<std::uint8_t> bits;
  bits.reserve(text.size());
  for (char c : text) {
    if (c == '0' || c == '1') {
      bits.push_back(static_cast<std::uint8_t>(c - '0'));
    } else if (c != ' ' && c != '\n' && c != '\r' && c != '\t') {
      fail(ErrorKind::InvalidArgument, std::string("unexpected character '") + c + "' in bit text");
    }
  }
  return BitSequence(std::move(bits));
}

BitSequence BitSequence::from_words(std::span<const Word> words, std::size_t n) {
  if (words.size() * kWordBits < n) fail(ErrorKind::InvalidArgument, "not enough words for the requested length");
  std::vector<std::uint8_t> bits(n);
  for (std::size_t i = 0; i < n; ++i) bits[i] = get_bit(words, i) ? 1 : 0;
  return BitSequence(std::move(bits));
}

std::string_view test_name(TestId id) noexcept {
  switch (id) {
    case TestId::Frequency: return "Frequency";
    case TestId::BlockFrequency: return "BlockFrequency";
    case TestId::CumulativeSumsForward: return "CumulativeSums-S1";
    case TestId::CumulativeSumsBackward: return "CumulativeSums-S2";
    case TestId::Runs: return "Runs";
    case TestId::LongestRun: return "LongestRun";
    case TestId::Rank: return "Rank";
    case TestId::Fft: return "FFT";
  }
  return "?";
}

TestId test_from_name(std::string_view name) {
  for (TestId id : kAllTests) {
    if (test_name(id) == name) return id;
  }
  fail(ErrorKind::InvalidArgument, "unknown randomness test '" + std::string(name) + "'");
}

std::size_t minimum_length(TestId id) noexcept {
  switch (id) {
    case TestId::Frequency:
    case TestId::BlockFrequency:
    case TestId::CumulativeSumsForward:
    case TestId::CumulativeSumsBackward:
    case TestId::Runs: return 100;
    case TestId::LongestRun: return 128;
    case TestId::Rank: return 38912;
    case TestId::Fft: return 1000;
  }
  return 0;
}

TestResult frequency_test(const BitSequence& seq, const TestOptions& options) {
  require_length(seq, TestId::Frequency, options, 1);
  long long s = 0;
  for (auto b : seq.bits()) s += b ? 1 : -1;
  const double n = static_cast<double>(seq.size());
  const double s_obs = std::abs(static_cast<double>(s)) / std::sqrt(n);
  return finish(TestId::Frequency, {special::erfc(s_obs / std::sqrt(2.0))}, options.alpha);
}

TestResult block_frequency_test(const BitSequence& seq, const TestOptions& options) {
  const std::size_t m = options.block_size;
  if (m == 0 || (!options.fixture_mode && m < 20)) {
    fail(ErrorKind::InvalidArgument, "block size must be at least 20");
  }
  require_length(seq, TestId::BlockFrequency, options, 1);
  const std::size_t blocks = seq.size() / m;
  if (blocks == 0) fail(ErrorKind::InvalidArgument, "block size exceeds the sequence length");
  double sum = 0.0;
  for (std::size_t i = 0; i < blocks; ++i) {
    std::size_t ones = 0;
    for (std::size_t j = 0; j < m; ++j) ones += seq[i * m + j];
    const double v = static_cast<double>(ones) / static_cast<double>(m) - 0.5;
    sum += v * v;
  }
  const double chi2 = 4.0 * static_cast<double>(m) * sum;
  return finish(TestId::BlockFrequency, {special::igamc(static_cast<double>(blocks) / 2.0, chi2 / 2.0)}, options.alpha);
}

TestResult cumulative_sums_test(const BitSequence& seq, ScanMode mode, const TestOptions& options) {
  const TestId id = mode == ScanMode::Forward ? TestId::CumulativeSumsForward : TestId::CumulativeSumsBackward;
  require_length(seq, id, options, 1);
  const std::size_t n_bits = seq.size();
  long long s = 0;
  long long z = 0;
  for (std::size_t i = 0; i < n_bits; ++i) {
    const std::size_t k = mode == ScanMode::Forward ? i : n_bits - 1 - i;
    s += seq[k] ? 1 : -1;
    z = std::max(z, s < 0 ? -s : s);
  }
  const double zf = static_cast<double>(z);
  const double sqrt_n = std::sqrt(static_cast<double>(n_bits));
  // Summation bounds use truncating integer division, as the reference
  // implementation does; its published examples depend on it.
  const auto ni = static_cast<long long>(n_bits);
  double sum1 = 0.0;
  for (long long k = (-ni / z + 1) / 4; k <= (ni / z - 1) / 4; ++k) {
    const double kk = static_cast<double>(k);
    sum1 += special::normal_cdf((4.0 * kk + 1.0) * zf / sqrt_n) - special::normal_cdf((4.0 * kk - 1.0) * zf / sqrt_n);
  }
  double sum2 = 0.0;
  for (long long k = (-ni / z - 3) / 4; k <= (ni / z - 1) / 4; ++k) {
    const double kk = static_cast<double>(k);
    sum2 += special::normal_cdf((4.0 * kk + 3.0) * zf / sqrt_n) - special::normal_cdf((4.0 * kk + 1.0) * zf / sqrt_n);
  }
  return finish(id, {1.0 - sum1 + sum2}, options.alpha);
}

TestResult runs_test(const BitSequence& seq, const TestOptions& options) {
  require_length(seq, TestId::Runs, options, 2);
  const double n = static_cast<double>(seq.size());
  std::size_t ones = 0;
  for (auto b : seq.bits()) ones += b;
  const double pi = static_cast<double>(ones) / n;
  // Frequency prerequisite: a badly unbalanced sequence fails outright.
  if (std::abs(pi - 0.5) >= 2.0 / std::sqrt(n)) return finish(TestId::Runs, {0.0}, options.alpha);
  std::size_t runs = 1;
  for (std::size_t i = 1; i < seq.size(); ++i) runs += seq[i] != seq[i - 1];
  const double num = std::abs(static_cast<double>(runs) - 2.0 * n * pi * (1.0 - pi));
  const double den = 2.0 * std::sqrt(2.0 * n) * pi * (1.0 - pi);
  return finish(TestId::Runs, {special::erfc(num / den)}, options.alpha);
}

TestResult longest_run_test(const BitSequence& seq, const TestOptions& options) {
  require_length(seq, TestId::LongestRun, options, 128);
  static constexpr double kPi8[] = {0.21484375, 0.3671875, 0.23046875, 0.1875};
  static constexpr double kPi128[] = {0.1174035788, 0.242955959, 0.249363483, 0.17517706, 0.102701071, 0.112398847};
  static constexpr double kPi10000[] = {0.0882, 0.2092, 0.2483, 0.1933, 0.1208, 0.0675, 0.0727};

  const std::size_t n = seq.size();
  std::size_t m = 0;
  std::size_t first_class = 0;  // longest run mapped to class 0 when <= this
  std::span<const double> probabilities;
  if (n < 6272) {
    m = 8;
    first_class = 1;
    probabilities = kPi8;
  } else if (n < 750000) {
    m = 128;
    first_class = 4;
    probabilities = kPi128;
  } else {
    m = 10000;
    first_class = 10;
    probabilities = kPi10000;
  }
  const std::size_t classes = probabilities.size();
  const std::size_t blocks = n / m;
  std::vector<std::size_t> counts(classes, 0);
  for (std::size_t i = 0; i < blocks; ++i) {
    std::size_t run = 0;
    std::size_t longest = 0;
    for (std::size_t j = 0; j < m; ++j) {
      run = seq[i * m + j] ? run + 1 : 0;
      longest = std::max(longest, run);
    }
    const std::size_t cls = longest <= first_class ? 0 : std::min(longest - first_class, classes - 1);
    ++counts[cls];
  }
  const double chi2 = chi_square(counts, probabilities, static_cast<double>(blocks));
  const double k = static_cast<double>(classes - 1);
  return finish(TestId::LongestRun, {special::igamc(k / 2.0, chi2 / 2.0)}, options.alpha);
}

int gf2_rank(std::span<const std::uint32_t, 32> rows) noexcept {
  std::array<std::uint32_t, 32> m{};
  std::copy(rows.begin(), rows.end(), m.begin());
  int rank = 0;
  for (int col = 31; col >= 0 && rank < 32; --col) {
    const std::uint32_t bit = std::uint32_t{1} << col;
    int pivot = -1;
    for (int r = rank; r < 32; ++r) {
      if (m[static_cast<std::size_t>(r)] & bit) {
        pivot = r;
        break;
      }
    }
    if (pivot < 0) continue;
    std::swap(m[static_cast<std::size_t>(rank)], m[static_cast<std::size_t>(pivot)]);
    for (int r = 0; r < 32; ++r) {
      if (r != rank && (m[static_cast<std::size_t>(r)] & bit)) m[static_cast<std::size_t>(r)] ^= m[static_cast<std::size_t>(rank)];
    }
    ++rank;
  }
  return rank;
}

double rank_probability(int r) noexcept {
  // 2^{r(Q+M-r)-MQ} prod_{i<r} (1-2^{i-Q})(1-2^{i-M}) / (1-2^{i-r}), M = Q = 32.
  constexpr int kDim = 32;
  double log2p = static_cast<double>(r * (2 * kDim - r) - kDim * kDim);
  double prod = 1.0;
  for (int i = 0; i < r; ++i) {
    const double a = 1.0 - std::exp2(i - kDim);
    prod *= a * a / (1.0 - std::exp2(i - r));
  }
  return std::exp2(log2p) * prod;
}

TestResult rank_test(const BitSequence& seq, const TestOptions& options) {
  require_length(seq, TestId::Rank, options, 1024);
  const std::size_t matrices = seq.size() / 1024;
  std::array<std::size_t, 3> counts{};  // full, full-1, lower
  std::array<std::uint32_t, 32> rows{};
  for (std::size_t k = 0; k < matrices; ++k) {
    for (std::size_t i = 0; i < 32; ++i) {
      std::uint32_t w = 0;
      for (std::size_t j = 0; j < 32; ++j) w = (w << 1) | seq[k * 1024 + i * 32 + j];
      rows[i] = w;
    }
    const int r = gf2_rank(rows);
    ++counts[r == 32 ? 0 : r == 31 ? 1 : 2];
  }
  const double p32 = rank_probability(32);
  const double p31 = rank_probability(31);
  const std::array<double, 3> probabilities{p32, p31, 1.0 - p32 - p31};
  const double chi2 = chi_square(counts, probabilities, static_cast<double>(matrices));
  return finish(TestId::Rank, {special::igamc(1.0, chi2 / 2.0)}, options.alpha);
}

TestResult dft_test(const BitSequence& seq, const TestOptions& options) {
  require_length(seq, TestId::Fft, options, 2);
  const std::size_t n = seq.size();
  const std::size_t half = n / 2;
  struct FftwFree {
    void operator()(void* p) const noexcept { fftw_free(p); }
  };
  std::unique_ptr<double[], FftwFree> in(static_cast<double*>(fftw_malloc(sizeof(double) * n)));
  std::unique_ptr<fftw_complex[], FftwFree> out(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (half + 1))));
  for (std::size_t i = 0; i < n; ++i) in[i] = seq[i] ? 1.0 : -1.0;
  fftw_plan plan = nullptr;
  {
    std::lock_guard lock(fftw_planner_mutex());
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.get(), out.get(), FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  // Bins 0 .. n/2 - 1, DC included, as in the reference implementation.
  const double threshold = std::sqrt(std::log(1.0 / 0.05) * static_cast<double>(n));
  std::size_t below = 0;
  for (std::size_t i = 0; i < half; ++i) below += std::hypot(out[i][0], out[i][1]) < threshold;
  const double expected = 0.95 * static_cast<double>(n) / 2.0;
  const double d = (static_cast<double>(below) - expected) / std::sqrt(static_cast<double>(n) * 0.95 * 0.05 / 4.0);
  return finish(TestId::Fft, {special::erfc(std::abs(d) / std::sqrt(2.0))}, options.alpha);
}

TestResult run_test(TestId id, const BitSequence& seq, const TestOptions& options) {
  switch (id) {
    case TestId::Frequency: return frequency_test(seq, options);
    case TestId::BlockFrequency: return block_frequency_test(seq, options);
    case TestId::CumulativeSumsForward: return cumulative_sums_test(seq, ScanMode::Forward, options);
    case TestId::CumulativeSumsBackward: return cumulative_sums_test(seq, ScanMode::Backward, options);
    case TestId::Runs: return runs_test(seq, options);
    case TestId::LongestRun: return longest_run_test(seq, options);
    case TestId::Rank: return rank_test(seq, options);
    case TestId::Fft: return dft_test(seq, options);
  }
  fail(ErrorKind::InvalidArgument, "unknown test");
}

std::vector<TestResult> run_suite(const BitSequence& seq, std::span<const TestId> tests, const TestOptions& options) {
  std::vector<TestResult> out;
  out.reserve(tests.size());
  for (TestId id : tests) {
    try {
      out.push_back(run_test(id, seq, options));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::InsufficientLength) throw;
    }
  }
  return out;
}

SuiteAggregate aggregate_suite(std::span<const std::vector<TestResult>> per_sequence, double alpha) {
  if (per_sequence.size() < 2) fail(ErrorKind::InvalidArgument, "aggregation needs at least two sequences");
  SuiteAggregate out;
  for (const auto& results : per_sequence) {
    for (const TestResult& r : results) {
      TestAggregate& agg = out[r.test];
      ++agg.total;
      bool pass = true;
      for (double p : r.p_values) {
        pass = pass && p >= alpha;
        const auto bin = std::min<std::size_t>(9, static_cast<std::size_t>(std::floor(p * 10.0)));
        ++agg.bins[bin];
      }
      agg.passing += pass;
    }
  }
  for (auto& [id, agg] : out) {
    std::size_t samples = 0;
    for (auto b : agg.bins) samples += b;
    const double expected = static_cast<double>(samples) / 10.0;
    double chi2 = 0.0;
    for (auto b : agg.bins) {
      const double diff = static_cast<double>(b) - expected;
      chi2 += diff * diff / expected;
    }
    agg.uniformity_p = special::igamc(9.0 / 2.0, chi2 / 2.0);
  }
  return out;
}

}  // namespace pufsim::nist
