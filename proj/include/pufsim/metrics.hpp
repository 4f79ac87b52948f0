#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pufsim/bits.hpp"
#include "pufsim/entropy.hpp"
#include "pufsim/population.hpp"
#include "pufsim/signature.hpp"

namespace pufsim {

/// Counts per bucket [k*width, (k+1)*width) percent. 100% falls in the last
/// bucket, which starts at 100.
struct Histogram {
  double bucket_width_percent = 1.0;
  std::vector<std::uint64_t> counts;

  [[nodiscard]] std::uint64_t total() const noexcept;
  [[nodiscard]] std::size_t mode_bucket() const noexcept;
  [[nodiscard]] double bucket_start(std::size_t k) const noexcept { return bucket_width_percent * static_cast<double>(k); }
  void add(double percent);
};

Histogram make_histogram(double bucket_width_percent);
Histogram hd_histogram(std::span<const double> hd_percent, double bucket_width_percent);

/// Mean pairwise fractional Hamming distance over all R(R-1)/2 device pairs,
/// as a percentage. One row per device, n = cols.
double inter_hd(const BitMatrix& signatures);

/// Mean Hamming distance of each re-read to the reference, as a percentage.
double intra_hd(std::span<const Word> reference, std::span<const std::span<const Word>> rereads, std::size_t n);

struct InterHdResult {
  double inter_hd_percent = 0.0;
  std::uint64_t pairs = 0;
  Histogram histogram;
};

/// Eq. 1 over one trial of a signature set, honoring masks: each pair uses
/// the positions kept by both devices. Also fills the pairwise histogram.
InterHdResult inter_hd(const SignatureSet& sigs, std::size_t trial, double bucket_width_percent = 1.0);

/// Eq. 2 per device, every trial of reads taken as a re-read against the
/// golden signature; masks of reads are honored.
std::vector<double> intra_hd_per_device(const SignatureSet& reads, const GoldenSignature& golden);
double mean_intra_hd(const SignatureSet& reads, const GoldenSignature& golden);

struct OnesSummary {
  double ones_fraction = 0.0;
  BitMatrix colormap;  // devices x n power-up values of the chosen trial
};

OnesSummary ones_fraction_and_colormap(const SignatureSet& sigs, std::size_t trial);

struct SweepPoint {
  EnvironmentCondition env;
  double intra_hd_percent = 0.0;
  double expected_ber_percent = 0.0;  // closed-form flip rate at the calibrated noise
};

struct SweepOptions {
  std::size_t trials = 1;
  std::size_t enroll_trials = 5;
  std::uint64_t seed = 0;
};

/// Enrolls goldens at the calibration's reference environment, then reads at
/// each env and reports mean intra-HD against those goldens.
std::vector<SweepPoint> robustness_sweep(const DevicePopulation& population, const NoiseCalibration& calibration,
                                         std::span<const EnvironmentCondition> envs, const SweepOptions& options);

struct MetricReport {
  double inter_hd_percent = 0.0;
  double intra_hd_percent = 0.0;
  Histogram hd_histogram;
  double ones_fraction = 0.0;
  BitMatrix colormap;
  std::vector<std::pair<EnvironmentCondition, double>> per_env_ber;
};

}  // namespace pufsim
