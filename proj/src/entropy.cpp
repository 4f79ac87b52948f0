#include "pufsim/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "pufsim/error.hpp"

namespace pufsim {
namespace {

void validate_axis(const std::vector<AxisAnchor>& axis, const char* name, double reference) {
  if (axis.empty()) fail(ErrorKind::InvalidSpec, std::string(name) + " axis has no anchors");
  bool has_reference = false;
  for (std::size_t i = 0; i < axis.size(); ++i) {
    const AxisAnchor& a = axis[i];
    if (!std::isfinite(a.coordinate) || !(a.ber >= 0.0 && a.ber < 0.5)) {
      fail(ErrorKind::InvalidSpec, std::string(name) + " anchor BER must lie in [0, 0.5)");
    }
    if (i > 0 && !(axis[i - 1].coordinate < a.coordinate)) {
      fail(ErrorKind::InvalidSpec, std::string(name) + " anchors must be sorted and unique");
    }
    has_reference = has_reference || a.coordinate == reference;
  }
  if (!has_reference) fail(ErrorKind::InvalidSpec, std::string(name) + " axis must contain the reference coordinate");
}

double interpolate(const std::vector<AxisAnchor>& axis, double x, const char* name, const char* unit) {
  if (x < axis.front().coordinate || x > axis.back().coordinate) {
    std::ostringstream msg;
    msg << name << ' ' << x << ' ' << unit << " outside calibrated range [" << axis.front().coordinate << ", "
        << axis.back().coordinate << ']';
    fail(ErrorKind::ExtrapolationRefused, msg.str());
  }
  for (std::size_t i = 0; i < axis.size(); ++i) {
    if (axis[i].coordinate == x) return axis[i].ber;
    if (axis[i].coordinate > x) {
      const AxisAnchor& lo = axis[i - 1];
      const AxisAnchor& hi = axis[i];
      const double t = (x - lo.coordinate) / (hi.coordinate - lo.coordinate);
      return lo.ber + t * (hi.ber - lo.ber);
    }
  }
  return axis.back().ber;
}

double ber_at(const std::vector<AxisAnchor>& axis, double x) {
  for (const auto& a : axis) {
    if (a.coordinate == x) return a.ber;
  }
  return 0.0;
}

}  // namespace

void EnvironmentCondition::validate() const {
  if (!std::isfinite(supply_voltage_volts) || supply_voltage_volts <= 0.0) {
    fail(ErrorKind::InvalidArgument, "supply voltage must be positive");
  }
  if (!std::isfinite(temperature_celsius) || temperature_celsius < kMinTemperatureCelsius ||
      temperature_celsius > kMaxTemperatureCelsius) {
    fail(ErrorKind::InvalidArgument, "temperature outside model validity range [-55, 125] C");
  }
}

void NoiseCalibration::validate() const {
  if (!(sigma_mismatch > 0.0) || !std::isfinite(sigma_mismatch)) {
    fail(ErrorKind::InvalidSpec, "sigma_mismatch must be positive");
  }
  reference.validate();
  validate_axis(temperature_axis, "temperature", reference.temperature_celsius);
  validate_axis(voltage_axis, "voltage", reference.supply_voltage_volts);
  const double bt = ber_at(temperature_axis, reference.temperature_celsius);
  const double bv = ber_at(voltage_axis, reference.supply_voltage_volts);
  if (bt != bv) fail(ErrorKind::InvalidSpec, "temperature and voltage axes disagree on the reference BER");
}

bool NoiseCalibration::contains(const EnvironmentCondition& env) const noexcept {
  if (temperature_axis.empty() || voltage_axis.empty()) return false;
  return env.temperature_celsius >= temperature_axis.front().coordinate &&
         env.temperature_celsius <= temperature_axis.back().coordinate &&
         env.supply_voltage_volts >= voltage_axis.front().coordinate &&
         env.supply_voltage_volts <= voltage_axis.back().coordinate;
}

double NoiseCalibration::temperature_ber(double celsius) const {
  return interpolate(temperature_axis, celsius, "temperature", "C");
}

double NoiseCalibration::voltage_ber(double volts) const { return interpolate(voltage_axis, volts, "voltage", "V"); }

NoiseCalibration noiseless_calibration(double sigma_mismatch, EnvironmentCondition reference) {
  NoiseCalibration c;
  c.sigma_mismatch = sigma_mismatch;
  c.reference = reference;
  c.temperature_axis = {{reference.temperature_celsius, 0.0}};
  c.voltage_axis = {{reference.supply_voltage_volts, 0.0}};
  return c;
}

PowerUpOutcome resolve_power_up(double static_mismatch, double systematic_offset, double noise_draw) {
  if (!std::isfinite(static_mismatch) || !std::isfinite(systematic_offset) || !std::isfinite(noise_draw)) {
    fail(ErrorKind::InvalidArgument, "resolve_power_up: non-finite input");
  }
  const double margin = static_mismatch + systematic_offset + noise_draw;
  return {margin > 0.0 ? 1 : 0, margin};
}

double expected_flip_probability(double sigma_m, double sigma_n) {
  if (!(sigma_m > 0.0) || !std::isfinite(sigma_m)) fail(ErrorKind::InvalidArgument, "sigma_m must be positive");
  if (!(sigma_n >= 0.0) || !std::isfinite(sigma_n)) fail(ErrorKind::InvalidArgument, "sigma_n must be non-negative");
  return std::atan2(sigma_n, sigma_m) / std::numbers::pi;
}

double calibrate_noise_for_ber(double target_ber, double sigma_m) {
  if (!(sigma_m > 0.0) || !std::isfinite(sigma_m)) fail(ErrorKind::InvalidArgument, "sigma_m must be positive");
  if (!(target_ber >= 0.0)) fail(ErrorKind::InvalidArgument, "target BER must be non-negative");
  if (!(target_ber < 0.5)) fail(ErrorKind::InvalidArgument, "target BER >= 0.5 is unreachable");
  return sigma_m * std::tan(std::numbers::pi * target_ber);
}

double noise_sigma_at(const NoiseCalibration& calibration, const EnvironmentCondition& env) {
  env.validate();
  const double sm = calibration.sigma_mismatch;
  const double st = calibrate_noise_for_ber(calibration.temperature_ber(env.temperature_celsius), sm);
  const double sv = calibrate_noise_for_ber(calibration.voltage_ber(env.supply_voltage_volts), sm);
  // Along either axis one term cancels the reference term exactly.
  if (env.supply_voltage_volts == calibration.reference.supply_voltage_volts) return st;
  if (env.temperature_celsius == calibration.reference.temperature_celsius) return sv;
  const double sr = calibrate_noise_for_ber(ber_at(calibration.temperature_axis, calibration.reference.temperature_celsius), sm);
  return std::sqrt(std::max(0.0, st * st + sv * sv - sr * sr));
}

}  // namespace pufsim
