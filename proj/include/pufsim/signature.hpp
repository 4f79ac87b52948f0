#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pufsim/bits.hpp"
#include "pufsim/entropy.hpp"
#include "pufsim/population.hpp"

namespace pufsim {

struct ReadoutSession {
  EnvironmentCondition env;
  std::size_t trials = 1;
  std::uint64_t session_seed = 0;
  NoiseCalibration calibration;
};

/// Power-up readouts indexed (device, trial, position).
///
/// Masks are recorded, never applied destructively: the raw bits are always
/// retained. A position mask (1 = kept) is shared by every device; optional
/// per-device masks additionally drop individual unstable cells.
class SignatureSet {
 public:
  SignatureSet() = default;
  SignatureSet(std::size_t devices, std::size_t trials, std::size_t n);

  [[nodiscard]] std::size_t devices() const noexcept { return devices_; }
  [[nodiscard]] std::size_t trials() const noexcept { return trials_; }
  [[nodiscard]] std::size_t n() const noexcept { return n_; }

  [[nodiscard]] std::span<const Word> row(std::size_t device, std::size_t trial) const noexcept {
    return bits_.row(device * trials_ + trial);
  }
  [[nodiscard]] std::span<Word> row(std::size_t device, std::size_t trial) noexcept {
    return bits_.row(device * trials_ + trial);
  }
  [[nodiscard]] bool bit(std::size_t device, std::size_t trial, std::size_t pos) const noexcept {
    return get_bit(row(device, trial), pos);
  }
  void set_bit(std::size_t device, std::size_t trial, std::size_t pos, bool v) noexcept {
    pufsim::set_bit(row(device, trial), pos, v);
  }
  [[nodiscard]] const BitMatrix& bits() const noexcept { return bits_; }
  [[nodiscard]] BitMatrix& bits() noexcept { return bits_; }

  [[nodiscard]] const std::optional<BitVector>& position_mask() const noexcept { return position_mask_; }
  [[nodiscard]] const std::optional<BitMatrix>& device_masks() const noexcept { return device_masks_; }
  [[nodiscard]] bool masked() const noexcept { return position_mask_.has_value() || device_masks_.has_value(); }

  /// Combined keep-mask of one device (all ones when unmasked).
  [[nodiscard]] BitVector keep_mask(std::size_t device) const;
  /// popcount of the position mask, or n when no position mask is set.
  [[nodiscard]] std::size_t effective_length() const noexcept;

  void set_position_mask(std::optional<BitVector> mask);
  void set_device_masks(std::optional<BitMatrix> masks);

  friend bool operator==(const SignatureSet&, const SignatureSet&) = default;

 private:
  std::size_t devices_ = 0;
  std::size_t trials_ = 0;
  std::size_t n_ = 0;
  BitMatrix bits_;
  std::optional<BitVector> position_mask_;
  std::optional<BitMatrix> device_masks_;
};

/// Per-device enrollment reference.
struct GoldenSignature {
  BitMatrix bits;                // devices x n
  std::vector<double> stability;  // devices x n, fraction of trials agreeing, in [0.5, 1]

  [[nodiscard]] std::size_t devices() const noexcept { return bits.rows(); }
  [[nodiscard]] std::size_t n() const noexcept { return bits.cols(); }
  [[nodiscard]] double stability_at(std::size_t device, std::size_t pos) const noexcept {
    return stability[device * n() + pos];
  }
  /// The golden bits as a one-trial signature set.
  [[nodiscard]] SignatureSet as_signature_set() const;
};

SignatureSet read_signatures(const DevicePopulation& population, const ReadoutSession& session);

/// Majority vote over trials per (device, position); an exact tie resolves to
/// the trial-0 bit.
GoldenSignature enroll_golden(const SignatureSet& sigs);

/// Keep-mask over positions: drops p when the across-device mean golden bit
/// deviates from 0.5 by more than bias_threshold, or when the across-device
/// mean stability falls below stability_threshold.
BitVector eliminate_biased_positions(const SignatureSet& sigs, double bias_threshold, double stability_threshold);

/// Per-device keep-masks: drops cells whose own enrollment stability is below
/// stability_threshold.
BitMatrix mask_unstable_cells(const GoldenSignature& golden, double stability_threshold);

SignatureSet apply_mask(const SignatureSet& sigs, const BitVector& mask);
SignatureSet apply_device_masks(const SignatureSet& sigs, const BitMatrix& masks);

}  // namespace pufsim
