#include "pufsim/signature.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pufsim/error.hpp"
#include "pufsim/parallel.hpp"
#include "pufsim/rng.hpp"

namespace pufsim {

SignatureSet::SignatureSet(std::size_t devices, std::size_t trials, std::size_t n)
    : devices_(devices), trials_(trials), n_(n), bits_(devices * trials, n) {
  if (devices == 0 || trials == 0 || n == 0) fail(ErrorKind::InvalidArgument, "signature set dimensions must be positive");
}

BitVector SignatureSet::keep_mask(std::size_t device) const {
  BitVector keep = position_mask_ ? *position_mask_ : BitVector(n_, true);
  if (device_masks_) {
    auto dst = keep.words();
    auto src = device_masks_->row(device);
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] &= src[i];
  }
  return keep;
}

std::size_t SignatureSet::effective_length() const noexcept {
  return position_mask_ ? position_mask_->count() : n_;
}

void SignatureSet::set_position_mask(std::optional<BitVector> mask) {
  if (mask) {
    if (mask->size() != n_) fail(ErrorKind::InvalidArgument, "mask length does not match signature length");
    if (mask->count() == 0) fail(ErrorKind::EmptySignature, "mask keeps no positions");
  }
  position_mask_ = std::move(mask);
}

void SignatureSet::set_device_masks(std::optional<BitMatrix> masks) {
  if (masks) {
    if (masks->rows() != devices_ || masks->cols() != n_) {
      fail(ErrorKind::InvalidArgument, "device mask shape does not match the signature set");
    }
    for (std::size_t d = 0; d < devices_; ++d) {
      if (popcount(masks->row(d)) == 0) {
        fail(ErrorKind::EmptySignature, "device mask keeps no cells for device " + std::to_string(d));
      }
    }
  }
  device_masks_ = std::move(masks);
}

SignatureSet GoldenSignature::as_signature_set() const {
  SignatureSet s(devices(), 1, n());
  for (std::size_t d = 0; d < devices(); ++d) {
    auto src = bits.row(d);
    auto dst = s.row(d, 0);
    std::copy(src.begin(), src.end(), dst.begin());
  }
  return s;
}

SignatureSet read_signatures(const DevicePopulation& population, const ReadoutSession& session) {
  if (session.trials == 0) fail(ErrorKind::InvalidArgument, "readout session needs at least one trial");
  if (session.trials > 0xFFFFFFFFu) fail(ErrorKind::InvalidArgument, "too many trials");
  session.calibration.validate();
  if (std::abs(session.calibration.sigma_mismatch - population.spec().sigma_mismatch) >
      1e-12 * population.spec().sigma_mismatch) {
    fail(ErrorKind::InvalidArgument, "calibration sigma_mismatch differs from the population's");
  }
  const double sigma_n = noise_sigma_at(session.calibration, session.env);

  const std::size_t devices = population.num_devices();
  const std::size_t n = population.cells_per_device();
  const std::size_t trials = session.trials;
  SignatureSet sigs(devices, trials, n);
  const rng::CounterRng rng(session.session_seed);
  const auto offsets = population.offsets();

  parallel_for(devices * trials, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const std::size_t d = i / trials;
      const std::size_t t = i % trials;
      const auto mismatch = population.device_mismatch(d);
      auto row = sigs.row(d, t);
      for (std::size_t p = 0; p < n; ++p) {
        const double noise =
            sigma_n == 0.0 ? 0.0
                           : sigma_n * rng.normal(static_cast<std::uint32_t>(d), static_cast<std::uint32_t>(t),
                                                  static_cast<std::uint32_t>(p), rng::Stream::Noise);
        if (resolve_power_up(mismatch[p], offsets[p], noise).bit) pufsim::set_bit(row, p, true);
      }
    }
  });
  return sigs;
}

GoldenSignature enroll_golden(const SignatureSet& sigs) {
  const std::size_t devices = sigs.devices();
  const std::size_t trials = sigs.trials();
  const std::size_t n = sigs.n();
  GoldenSignature g{BitMatrix(devices, n), std::vector<double>(devices * n)};
  for (std::size_t d = 0; d < devices; ++d) {
    auto out = g.bits.row(d);
    for (std::size_t p = 0; p < n; ++p) {
      std::size_t ones = 0;
      for (std::size_t t = 0; t < trials; ++t) ones += sigs.bit(d, t, p);
      const std::size_t zeros = trials - ones;
      const bool bit = ones == zeros ? sigs.bit(d, 0, p) : ones > zeros;
      pufsim::set_bit(out, p, bit);
      g.stability[d * n + p] = static_cast<double>(bit ? ones : zeros) / static_cast<double>(trials);
    }
  }
  return g;
}

BitVector eliminate_biased_positions(const SignatureSet& sigs, double bias_threshold, double stability_threshold) {
  if (!(bias_threshold > 0.0 && bias_threshold <= 0.5)) fail(ErrorKind::InvalidArgument, "bias threshold must lie in (0, 0.5]");
  if (!(stability_threshold > 0.5 && stability_threshold <= 1.0)) {
    fail(ErrorKind::InvalidArgument, "stability threshold must lie in (0.5, 1]");
  }
  if (sigs.devices() < 2) fail(ErrorKind::InvalidArgument, "bias elimination needs at least two devices");
  const GoldenSignature golden = enroll_golden(sigs);
  const std::size_t n = sigs.n();
  const auto devices = static_cast<double>(sigs.devices());
  BitVector keep(n, true);
  for (std::size_t p = 0; p < n; ++p) {
    std::size_t ones = 0;
    double stability = 0.0;
    for (std::size_t d = 0; d < sigs.devices(); ++d) {
      ones += golden.bits.get(d, p);
      stability += golden.stability_at(d, p);
    }
    const double mean = static_cast<double>(ones) / devices;
    if (std::abs(mean - 0.5) > bias_threshold || stability / devices < stability_threshold) keep.set(p, false);
  }
  if (keep.count() == 0) fail(ErrorKind::EmptySignature, "bias elimination removed every position");
  return keep;
}

BitMatrix mask_unstable_cells(const GoldenSignature& golden, double stability_threshold) {
  if (!(stability_threshold > 0.5 && stability_threshold <= 1.0)) {
    fail(ErrorKind::InvalidArgument, "stability threshold must lie in (0.5, 1]");
  }
  BitMatrix keep(golden.devices(), golden.n());
  for (std::size_t d = 0; d < golden.devices(); ++d) {
    std::size_t kept = 0;
    for (std::size_t p = 0; p < golden.n(); ++p) {
      if (golden.stability_at(d, p) >= stability_threshold) {
        keep.set(d, p, true);
        ++kept;
      }
    }
    if (kept == 0) fail(ErrorKind::EmptySignature, "every cell of device " + std::to_string(d) + " is unstable");
  }
  return keep;
}

SignatureSet apply_mask(const SignatureSet& sigs, const BitVector& mask) {
  if (mask.size() != sigs.n()) fail(ErrorKind::InvalidArgument, "mask length does not match signature length");
  SignatureSet out = sigs;
  out.set_position_mask(mask);
  return out;
}

SignatureSet apply_device_masks(const SignatureSet& sigs, const BitMatrix& masks) {
  SignatureSet out = sigs;
  out.set_device_masks(masks);
  return out;
}

}  // namespace pufsim
