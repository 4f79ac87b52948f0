#include "pufsim/metrics.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "pufsim/error.hpp"

namespace pufsim {
namespace {

BitMatrix matrix(const std::vector<std::string>& rows) {
  BitMatrix m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) m.set(r, c, rows[r][c] == '1');
  }
  return m;
}

SignatureSet as_set(const BitMatrix& m) {
  SignatureSet s(m.rows(), 1, m.cols());
  for (std::size_t d = 0; d < m.rows(); ++d) std::copy(m.row(d).begin(), m.row(d).end(), s.row(d, 0).begin());
  return s;
}

// Direct transcription of the pairwise average on unpacked strings.
double brute_inter(const std::vector<std::string>& rows) {
  const std::size_t r = rows.size();
  double sum = 0.0;
  for (std::size_t u = 0; u + 1 < r; ++u) {
    for (std::size_t v = u + 1; v < r; ++v) {
      int hd = 0;
      for (std::size_t i = 0; i < rows[u].size(); ++i) hd += rows[u][i] != rows[v][i];
      sum += static_cast<double>(hd) / static_cast<double>(rows[u].size());
    }
  }
  return 2.0 / (static_cast<double>(r) * static_cast<double>(r - 1)) * sum * 100.0;
}

std::vector<std::string> random_rows(std::mt19937_64& gen, std::size_t r, std::size_t n, double p = 0.5) {
  std::bernoulli_distribution bit(p);
  std::vector<std::string> rows(r, std::string(n, '0'));
  for (auto& row : rows) {
    for (auto& c : row) c = bit(gen) ? '1' : '0';
  }
  return rows;
}

TEST(InterHd, HandExamples) {
  EXPECT_EQ(inter_hd(matrix({"0101", "0101"})), 0.0);
  EXPECT_NEAR(inter_hd(matrix({"0000", "1111", "0011"})), 200.0 / 3.0, 1e-12);
  EXPECT_EQ(inter_hd(matrix({"0110", "1001"})), 100.0);
}

TEST(InterHd, Errors) {
  EXPECT_THROW(inter_hd(matrix({"0101"})), Error);
  EXPECT_THROW(inter_hd(as_set(matrix({"0101"})), 0), Error);
  EXPECT_THROW(inter_hd(as_set(matrix({"01", "10"})), 1), Error);
}

TEST(InterHd, AgreesWithBruteForce) {
  std::mt19937_64 gen(1);
  for (int iter = 0; iter < 2000; ++iter) {
    const std::size_t r = 2 + gen() % 4;
    const std::size_t n = 1 + gen() % 8;
    const auto rows = random_rows(gen, r, n);
    const double expected = brute_inter(rows);
    EXPECT_DOUBLE_EQ(inter_hd(matrix(rows)), expected);
    EXPECT_DOUBLE_EQ(inter_hd(as_set(matrix(rows)), 0).inter_hd_percent, expected);
  }
}

TEST(InterHd, PermutationAndComplementInvariant) {
  std::mt19937_64 gen(2);
  for (int iter = 0; iter < 200; ++iter) {
    auto rows = random_rows(gen, 6, 70);
    const double base = inter_hd(matrix(rows));
    std::shuffle(rows.begin(), rows.end(), gen);
    EXPECT_DOUBLE_EQ(inter_hd(matrix(rows)), base);
    for (auto& row : rows) {
      for (auto& c : row) c = c == '1' ? '0' : '1';
    }
    EXPECT_DOUBLE_EQ(inter_hd(matrix(rows)), base);
  }
}

TEST(InterHd, ExpectedValueForBiasedBits) {
  std::mt19937_64 gen(3);
  constexpr std::size_t kDevices = 200;
  constexpr std::size_t kBits = 512;
  for (double p : {0.5, 0.6, 0.75}) {
    const auto rows = random_rows(gen, kDevices, kBits, p);
    // Per-position disagreement fractions are independent across positions.
    std::vector<double> per_pos(kBits);
    for (std::size_t i = 0; i < kBits; ++i) {
      double k = 0;
      for (const auto& row : rows) k += row[i] == '1';
      per_pos[i] = 2.0 * k * (kDevices - k) / (kDevices * (kDevices - 1.0)) * 100.0;
    }
    double mean = 0, sq = 0;
    for (double v : per_pos) mean += v;
    mean /= kBits;
    for (double v : per_pos) sq += (v - mean) * (v - mean);
    const double se = std::sqrt(sq / (kBits - 1) / kBits);
    const double observed = inter_hd(matrix(rows));
    EXPECT_NEAR(observed, mean, 1e-9);
    EXPECT_NEAR(observed, 2.0 * p * (1 - p) * 100.0, 3.0 * se + 100.0 * 2 * p * (1 - p) / kDevices);
  }
}

TEST(InterHd, MaskedAgreesWithBruteForceOnKeptPositions) {
  std::mt19937_64 gen(4);
  for (int iter = 0; iter < 500; ++iter) {
    const std::size_t r = 2 + gen() % 4;
    const std::size_t n = 2 + gen() % 10;
    const auto rows = random_rows(gen, r, n);
    BitVector pos(n, true);
    BitMatrix dev(r, n);
    for (std::size_t d = 0; d < r; ++d) {
      for (std::size_t p = 0; p < n; ++p) dev.set(d, p, gen() % 4 != 0);
      dev.set(d, 0, true);
    }
    pos.set(n - 1, false);
    SignatureSet s = as_set(matrix(rows));
    s.set_position_mask(pos);
    s.set_device_masks(dev);
    double sum = 0.0;
    for (std::size_t u = 0; u + 1 < r; ++u) {
      for (std::size_t v = u + 1; v < r; ++v) {
        int hd = 0;
        int len = 0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
          if (!dev.get(u, i) || !dev.get(v, i)) continue;
          ++len;
          hd += rows[u][i] != rows[v][i];
        }
        sum += static_cast<double>(hd) / len;
      }
    }
    EXPECT_NEAR(inter_hd(s, 0).inter_hd_percent, sum / (r * (r - 1) / 2.0) * 100.0, 1e-9);
  }
}

TEST(InterHd, UnbiasedPopulationNearFifty) {
  std::mt19937_64 gen(5);
  const auto rows = random_rows(gen, 1000, 64);
  const InterHdResult res = inter_hd(as_set(matrix(rows)), 0);
  EXPECT_NEAR(res.inter_hd_percent, 50.0, 1.0);
  EXPECT_EQ(res.pairs, 1000u * 999u / 2u);
  EXPECT_EQ(res.histogram.total(), res.pairs);
  const double mode = res.histogram.bucket_start(res.histogram.mode_bucket());
  EXPECT_GE(mode, 45.0);
  EXPECT_LE(mode, 55.0);
}

TEST(IntraHd, HandExamples) {
  const BitMatrix m = matrix({"0000", "0001", "0011"});
  const std::vector<std::span<const Word>> same{m.row(0), m.row(0)};
  EXPECT_EQ(intra_hd(m.row(0), same, 4), 0.0);
  const std::vector<std::span<const Word>> rereads{m.row(1), m.row(2)};
  EXPECT_DOUBLE_EQ(intra_hd(m.row(0), rereads, 4), 37.5);
  EXPECT_THROW(intra_hd(m.row(0), {}, 4), Error);
}

TEST(IntraHd, ComplementInvariant) {
  const BitMatrix m = matrix({"0110", "0111", "1110"});
  const BitMatrix c = matrix({"1001", "1000", "0001"});
  const std::vector<std::span<const Word>> a{m.row(1), m.row(2)};
  const std::vector<std::span<const Word>> b{c.row(1), c.row(2)};
  EXPECT_DOUBLE_EQ(intra_hd(m.row(0), a, 4), intra_hd(c.row(0), b, 4));
}

TEST(Histogram, Buckets) {
  const double half[] = {50.0};
  const Histogram h = hd_histogram(half, 1.0);
  EXPECT_EQ(h.counts.size(), 101u);
  EXPECT_EQ(h.counts[50], 1u);
  EXPECT_EQ(h.total(), 1u);
  const double ends[] = {0.0, 100.0};
  const Histogram e = hd_histogram(ends, 1.0);
  EXPECT_EQ(e.counts.front(), 1u);
  EXPECT_EQ(e.counts.back(), 1u);
  EXPECT_THROW(hd_histogram(ends, 0.0), Error);
  const double pct[] = {100.0 * 21.0 / 64.0, 100.0 * 32.0 / 64.0};
  const Histogram p = hd_histogram(pct, 1.0);
  EXPECT_EQ(p.counts[32], 1u);
  EXPECT_EQ(p.counts[50], 1u);
}

TEST(OnesFraction, ZerosAndAlternating) {
  const OnesSummary zeros = ones_fraction_and_colormap(as_set(matrix({"0000", "0000"})), 0);
  EXPECT_EQ(zeros.ones_fraction, 0.0);
  EXPECT_EQ(popcount(zeros.colormap.data()), 0u);
  EXPECT_EQ(ones_fraction_and_colormap(as_set(matrix({"0101", "1010"})), 0).ones_fraction, 0.5);
  EXPECT_THROW(ones_fraction_and_colormap(as_set(matrix({"01"})), 1), Error);
}

PopulationSpec sweep_population(std::size_t devices) {
  PopulationSpec s;
  s.num_devices = devices;
  s.cells_per_device = 64;
  s.sigma_mismatch = 0.25;
  s.weights = {0.0, 0.0, 1.0};
  s.placement = make_independent_placement(8, 8);
  s.master_seed = 31;
  return s;
}

TEST(RobustnessSweep, ZeroNoiseAtNominal) {
  const DevicePopulation pop = generate_population(sweep_population(50));
  const NoiseCalibration cal = noiseless_calibration(0.25, {25.0, 1.0});
  const EnvironmentCondition envs[] = {{25.0, 1.0}};
  const auto out = robustness_sweep(pop, cal, envs, {2, 3, 1});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].intra_hd_percent, 0.0);
}

TEST(RobustnessSweep, ReproducesTemperatureAnchors) {
  NoiseCalibration cal;
  cal.sigma_mismatch = 0.25;
  cal.reference = {25.0, 1.0};
  cal.temperature_axis = {{0, 0.0837}, {20, 0.0123}, {25, 0.0}, {45, 0.0603}, {65, 0.1149}, {85, 0.1589}};
  cal.voltage_axis = {{1.0, 0.0}};
  const DevicePopulation pop = generate_population(sweep_population(1600));  // 102400 bits
  const EnvironmentCondition envs[] = {{0, 1.0}, {20, 1.0}, {45, 1.0}, {65, 1.0}, {85, 1.0}};
  const double expected[] = {8.37, 1.23, 6.03, 11.49, 15.89};
  const auto out = robustness_sweep(pop, cal, envs, {1, 1, 7});
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_NEAR(out[i].intra_hd_percent, expected[i], 1.0);
    EXPECT_NEAR(out[i].expected_ber_percent, expected[i], 1e-9);
  }
  const EnvironmentCondition outside[] = {{100, 1.0}};
  EXPECT_THROW(robustness_sweep(pop, cal, outside, {1, 1, 7}), Error);
}

}  // namespace
}  // namespace pufsim
