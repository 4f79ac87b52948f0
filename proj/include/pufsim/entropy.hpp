#pragma once

#include <vector>

namespace pufsim {

/// Operating point of a readout. Temperature must lie in the model validity
/// range [-55, 125] degrees C and the supply voltage must be positive.
struct EnvironmentCondition {
  double temperature_celsius = 25.0;
  double supply_voltage_volts = 1.0;

  void validate() const;
  friend bool operator==(const EnvironmentCondition&, const EnvironmentCondition&) = default;
};

inline constexpr double kMinTemperatureCelsius = -55.0;
inline constexpr double kMaxTemperatureCelsius = 125.0;

/// One point of a calibration axis: target expected bit-error rate at a
/// temperature (degrees C) or a supply voltage (V).
struct AxisAnchor {
  double coordinate = 0.0;
  double ber = 0.0;
  friend bool operator==(const AxisAnchor&, const AxisAnchor&) = default;
};

/// Maps an environment to a readout-noise magnitude.
///
/// Two independent piecewise-linear BER curves, one over temperature (taken
/// at the reference voltage) and one over voltage (taken at the reference
/// temperature). Both must contain the reference coordinate and agree on its
/// BER. Each axis contributes an independent noise source, so away from the
/// reference the variances add:
///
///   sigma_n^2 = s(b_T(T))^2 + s(b_V(V))^2 - s(b_ref)^2,  s(b) = sigma_m tan(pi b)
///
/// which makes every anchor exact. Queries outside either axis' hull are
/// refused rather than clamped.
struct NoiseCalibration {
  double sigma_mismatch = 0.25;
  EnvironmentCondition reference;
  std::vector<AxisAnchor> temperature_axis;
  std::vector<AxisAnchor> voltage_axis;

  void validate() const;
  [[nodiscard]] bool contains(const EnvironmentCondition& env) const noexcept;
  /// Interpolated target BER along each axis; throws ExtrapolationRefused.
  [[nodiscard]] double temperature_ber(double celsius) const;
  [[nodiscard]] double voltage_ber(double volts) const;

  friend bool operator==(const NoiseCalibration&, const NoiseCalibration&) = default;
};

/// A calibration whose hull is the single reference point with zero noise.
NoiseCalibration noiseless_calibration(double sigma_mismatch, EnvironmentCondition reference = {});

struct PowerUpOutcome {
  int bit = 0;
  double resolved_margin = 0.0;
};

/// Sign resolution of the bistable cell: 1 iff mismatch + offset + noise > 0.
/// An exact zero margin resolves to 0.
PowerUpOutcome resolve_power_up(double static_mismatch, double systematic_offset, double noise_draw);

/// P(sign(m + n) != sign(m)) for m ~ N(0, sigma_m^2), n ~ N(0, sigma_n^2):
/// atan(sigma_n / sigma_m) / pi.
double expected_flip_probability(double sigma_m, double sigma_n);

/// Inverse of expected_flip_probability in sigma_n: sigma_m tan(pi target_ber).
double calibrate_noise_for_ber(double target_ber, double sigma_m);

/// Readout noise standard deviation at env (same units as the mismatch).
double noise_sigma_at(const NoiseCalibration& calibration, const EnvironmentCondition& env);

}  // namespace pufsim
