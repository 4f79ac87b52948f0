#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "pufsim/entropy.hpp"
#include "pufsim/population.hpp"
#include "pufsim/randomness.hpp"

namespace pufsim {

inline constexpr const char* kSchemaVersion = "1.0";
inline constexpr int kSchemaMajor = 1;

struct BiasEntry {
  Position position;
  double offset_sigma = 0.0;  // in units of sigma_mismatch
  friend bool operator==(const BiasEntry&, const BiasEntry&) = default;
};

struct PopulationConfig {
  std::size_t num_devices = 0;
  std::size_t cells_per_device = 0;
  double sigma_mismatch = 0.25;
  MismatchWeights weights;
  PlacementConfig placement;
  std::vector<BiasEntry> bias;
  friend bool operator==(const PopulationConfig&, const PopulationConfig&) = default;
};

struct SessionConfig {
  std::string name;
  EnvironmentCondition env;
  std::size_t trials = 1;
  friend bool operator==(const SessionConfig&, const SessionConfig&) = default;
};

struct MaskingConfig {
  bool enabled = false;
  double bias_threshold = 0.3;
  double stability_threshold = 0.9;
  bool device_masks = true;
  friend bool operator==(const MaskingConfig&, const MaskingConfig&) = default;
};

struct MetricsConfig {
  double histogram_bucket_percent = 1.0;
  bool colormap = true;
  /// Devices are grouped into boards of this many regions for per-board
  /// intra-HD aggregates.
  std::size_t regions_per_board = 1;
  std::vector<EnvironmentCondition> sweep;
  std::size_t sweep_trials = 1;
  friend bool operator==(const MetricsConfig&, const MetricsConfig&) = default;
};

enum class SequenceMode { PerDevice, PerBoard, Concatenated };

struct RandomnessConfig {
  bool enabled = true;
  double alpha = nist::kDefaultAlpha;
  std::vector<nist::TestId> tests{std::begin(nist::kAllTests), std::end(nist::kAllTests)};
  SequenceMode sequence_mode = SequenceMode::PerDevice;
  std::size_t sequence_bits = 100000;  // concatenated mode only
  std::size_t block_size = 128;
  bool fixture_mode = false;
  friend bool operator==(const RandomnessConfig&, const RandomnessConfig&) = default;
};

struct ExperimentConfig {
  std::string schema_version = kSchemaVersion;
  std::uint64_t master_seed = 0;
  std::string output_dir = "pufsim-out";
  PopulationConfig population;
  /// sigma_mismatch is taken from the population section.
  NoiseCalibration calibration;
  SessionConfig enroll{"enroll", {}, 1};
  std::vector<SessionConfig> sessions;
  MaskingConfig masking;
  MetricsConfig metrics;
  RandomnessConfig randomness;

  /// Throws Config on inconsistent sections. Environments outside the
  /// calibration hull are refused later, by the stage that reads them.
  void validate() const;
  [[nodiscard]] PopulationSpec population_spec() const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

nlohmann::json to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

nlohmann::json placement_to_json(const PlacementConfig& placement);
PlacementConfig placement_from_json(const nlohmann::json& j);
nlohmann::json population_spec_to_json(const PopulationSpec& spec);
PopulationSpec population_spec_from_json(const nlohmann::json& j);
nlohmann::json env_to_json(const EnvironmentCondition& env);
EnvironmentCondition env_from_json(const nlohmann::json& j);
nlohmann::json calibration_to_json(const NoiseCalibration& calibration);
NoiseCalibration calibration_from_json(const nlohmann::json& j, double sigma_mismatch);

/// Built-in experiment presets: "paper-sim", "paper-fpga", "paper-voltage",
/// "d1" .. "d4", "minimal".
ExperimentConfig preset(const std::string& name);
std::vector<std::string> preset_names();

/// Replaces the master seed everywhere it is used.
void apply_seed(ExperimentConfig& config, std::uint64_t seed);

NoiseCalibration paper_temperature_calibration(double sigma_mismatch);
NoiseCalibration paper_voltage_calibration(double sigma_mismatch);

}  // namespace pufsim
