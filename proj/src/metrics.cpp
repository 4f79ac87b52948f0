#include "pufsim/metrics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "pufsim/error.hpp"
#include "pufsim/parallel.hpp"
#include "pufsim/rng.hpp"

namespace pufsim {

std::uint64_t Histogram::total() const noexcept {
  std::uint64_t t = 0;
  for (auto c : counts) t += c;
  return t;
}

std::size_t Histogram::mode_bucket() const noexcept {
  return static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

void Histogram::add(double percent) {
  // Small slack so exact bucket boundaries computed in floating point land in
  // the bucket they start.
  auto k = static_cast<std::size_t>(std::floor(percent / bucket_width_percent + 1e-9));
  k = std::min(k, counts.size() - 1);
  ++counts[k];
}

Histogram make_histogram(double bucket_width_percent) {
  if (!(bucket_width_percent > 0.0) || !std::isfinite(bucket_width_percent)) {
    fail(ErrorKind::InvalidArgument, "bucket width must be positive");
  }
  Histogram h;
  h.bucket_width_percent = bucket_width_percent;
  h.counts.assign(static_cast<std::size_t>(std::floor(100.0 / bucket_width_percent + 1e-9)) + 1, 0);
  return h;
}

Histogram hd_histogram(std::span<const double> hd_percent, double bucket_width_percent) {
  Histogram h = make_histogram(bucket_width_percent);
  for (double v : hd_percent) {
    if (!(v >= 0.0 && v <= 100.0)) fail(ErrorKind::InvalidArgument, "Hamming distance percent outside [0, 100]");
    h.add(v);
  }
  return h;
}

double inter_hd(const BitMatrix& signatures) {
  const std::size_t r = signatures.rows();
  const std::size_t n = signatures.cols();
  if (r < 2) fail(ErrorKind::InvalidArgument, "inter-HD needs at least two devices");
  if (n == 0) fail(ErrorKind::InvalidArgument, "signatures are empty");
  std::vector<std::uint64_t> per_row(r, 0);
  parallel_for(r, [&](std::size_t begin, std::size_t end) {
    for (std::size_t u = begin; u < end; ++u) {
      std::uint64_t s = 0;
      for (std::size_t v = u + 1; v < r; ++v) s += hamming(signatures.row(u), signatures.row(v));
      per_row[u] = s;
    }
  });
  std::uint64_t total = 0;
  for (auto s : per_row) total += s;
  const double pairs = static_cast<double>(r) * static_cast<double>(r - 1) / 2.0;
  return static_cast<double>(total) / (pairs * static_cast<double>(n)) * 100.0;
}

double intra_hd(std::span<const Word> reference, std::span<const std::span<const Word>> rereads, std::size_t n) {
  if (rereads.empty()) fail(ErrorKind::InvalidArgument, "intra-HD needs at least one re-read");
  if (n == 0) fail(ErrorKind::InvalidArgument, "signatures are empty");
  std::uint64_t total = 0;
  for (const auto& s : rereads) {
    if (s.size() != reference.size()) fail(ErrorKind::InvalidArgument, "re-read length differs from the reference");
    total += hamming(reference, s);
  }
  return static_cast<double>(total) / (static_cast<double>(rereads.size()) * static_cast<double>(n)) * 100.0;
}

InterHdResult inter_hd(const SignatureSet& sigs, std::size_t trial, double bucket_width_percent) {
  const std::size_t r = sigs.devices();
  if (r < 2) fail(ErrorKind::InvalidArgument, "inter-HD needs at least two devices");
  if (trial >= sigs.trials()) fail(ErrorKind::InvalidArgument, "trial index out of range");

  std::vector<BitVector> keep;
  keep.reserve(r);
  for (std::size_t d = 0; d < r; ++d) keep.push_back(sigs.keep_mask(d));
  const bool per_pair_length = sigs.device_masks().has_value();
  const std::size_t common_n = sigs.effective_length();

  InterHdResult out;
  out.histogram = make_histogram(bucket_width_percent);
  std::vector<double> row_sum(r, 0.0);
  std::vector<std::uint64_t> row_hd(r, 0);
  const std::size_t nbuckets = out.histogram.counts.size();
  std::vector<std::uint64_t> hist(r * nbuckets, 0);

  parallel_for(r, [&](std::size_t begin, std::size_t end) {
    Histogram local = make_histogram(bucket_width_percent);
    for (std::size_t u = begin; u < end; ++u) {
      std::fill(local.counts.begin(), local.counts.end(), 0);
      const auto su = sigs.row(u, trial);
      double sum = 0.0;
      std::uint64_t hd_sum = 0;
      for (std::size_t v = u + 1; v < r; ++v) {
        const auto sv = sigs.row(v, trial);
        std::size_t hd = 0;
        std::size_t n = common_n;
        if (per_pair_length) {
          const auto ku = keep[u].words();
          const auto kv = keep[v].words();
          n = 0;
          for (std::size_t i = 0; i < ku.size(); ++i) {
            const Word both = ku[i] & kv[i];
            n += static_cast<std::size_t>(std::popcount(both));
            hd += static_cast<std::size_t>(std::popcount((su[i] ^ sv[i]) & both));
          }
        } else {
          hd = hamming_masked(su, sv, keep[u].words());
        }
        if (n == 0) fail(ErrorKind::EmptySignature, "device pair shares no kept positions");
        hd_sum += hd;
        const double frac = static_cast<double>(hd) / static_cast<double>(n);
        sum += frac;
        local.add(frac * 100.0);
      }
      row_sum[u] = sum;
      row_hd[u] = hd_sum;
      std::copy(local.counts.begin(), local.counts.end(), hist.begin() + static_cast<std::ptrdiff_t>(u * nbuckets));
    }
  });

  const double pairs = static_cast<double>(r) * static_cast<double>(r - 1) / 2.0;
  if (per_pair_length) {
    double total = 0.0;
    for (double s : row_sum) total += s;
    out.inter_hd_percent = total / pairs * 100.0;
  } else {
    std::uint64_t total = 0;
    for (auto s : row_hd) total += s;
    out.inter_hd_percent = static_cast<double>(total) / (pairs * static_cast<double>(common_n)) * 100.0;
  }
  for (std::size_t u = 0; u < r; ++u) {
    for (std::size_t k = 0; k < nbuckets; ++k) out.histogram.counts[k] += hist[u * nbuckets + k];
  }
  out.pairs = static_cast<std::uint64_t>(r) * (r - 1) / 2;
  return out;
}

std::vector<double> intra_hd_per_device(const SignatureSet& reads, const GoldenSignature& golden) {
  if (golden.devices() != reads.devices() || golden.n() != reads.n()) {
    fail(ErrorKind::InvalidArgument, "golden signature shape does not match the readout");
  }
  std::vector<double> out(reads.devices());
  for (std::size_t d = 0; d < reads.devices(); ++d) {
    const BitVector keep = reads.keep_mask(d);
    const std::size_t n = keep.count();
    if (n == 0) fail(ErrorKind::EmptySignature, "device has no kept positions");
    std::uint64_t total = 0;
    for (std::size_t t = 0; t < reads.trials(); ++t) total += hamming_masked(golden.bits.row(d), reads.row(d, t), keep.words());
    out[d] = static_cast<double>(total) / (static_cast<double>(reads.trials()) * static_cast<double>(n)) * 100.0;
  }
  return out;
}

double mean_intra_hd(const SignatureSet& reads, const GoldenSignature& golden) {
  const auto per = intra_hd_per_device(reads, golden);
  double s = 0.0;
  for (double v : per) s += v;
  return s / static_cast<double>(per.size());
}

OnesSummary ones_fraction_and_colormap(const SignatureSet& sigs, std::size_t trial) {
  if (trial >= sigs.trials()) fail(ErrorKind::InvalidArgument, "trial index out of range");
  OnesSummary out{0.0, BitMatrix(sigs.devices(), sigs.n())};
  std::uint64_t ones = 0;
  for (std::size_t d = 0; d < sigs.devices(); ++d) {
    auto src = sigs.row(d, trial);
    auto dst = out.colormap.row(d);
    std::copy(src.begin(), src.end(), dst.begin());
    ones += popcount(src);
  }
  out.ones_fraction = static_cast<double>(ones) / (static_cast<double>(sigs.devices()) * static_cast<double>(sigs.n()));
  return out;
}

std::vector<SweepPoint> robustness_sweep(const DevicePopulation& population, const NoiseCalibration& calibration,
                                         std::span<const EnvironmentCondition> envs, const SweepOptions& options) {
  calibration.validate();
  for (const auto& env : envs) {
    env.validate();
    if (!calibration.contains(env)) {
      // Let noise_sigma_at produce the descriptive error.
      (void)noise_sigma_at(calibration, env);
    }
  }
  ReadoutSession enroll{calibration.reference, options.enroll_trials, rng::derive_seed(options.seed, 0), calibration};
  const GoldenSignature golden = enroll_golden(read_signatures(population, enroll));

  std::vector<SweepPoint> out;
  out.reserve(envs.size());
  for (std::size_t i = 0; i < envs.size(); ++i) {
    ReadoutSession session{envs[i], options.trials, rng::derive_seed(options.seed, i + 1), calibration};
    const SignatureSet reads = read_signatures(population, session);
    const double sigma_n = noise_sigma_at(calibration, envs[i]);
    out.push_back({envs[i], mean_intra_hd(reads, golden),
                   100.0 * expected_flip_probability(calibration.sigma_mismatch, sigma_n)});
  }
  return out;
}

}  // namespace pufsim
