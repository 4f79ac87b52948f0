#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "pufsim/config.hpp"

namespace pufsim {

inline constexpr const char* kToolVersion = "0.1.0";

enum class Stage { Generate, Enroll, Readout, Mask, Metrics, Sweep, Nist };

std::string stage_name(Stage stage);
Stage stage_from_name(const std::string& name);
/// Stages executed when `target` is requested, prerequisites first.
std::vector<Stage> stages_for(Stage target);
std::vector<Stage> all_stages();

struct ManifestFile {
  std::string name;  // relative to the output directory
  std::string sha256;
  std::uint64_t size = 0;
};

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

struct RunManifest {
  std::string tool_version = kToolVersion;
  std::string config_sha256;
  std::uint64_t master_seed = 0;
  std::vector<ManifestFile> files;
  std::vector<StageTiming> timings;
  bool complete = false;
  std::string failed_stage;
  std::string error;
};

nlohmann::json manifest_to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const nlohmann::json& j);

struct RunOptions {
  std::vector<Stage> stages = all_stages();
};

struct RunResult {
  std::filesystem::path output_dir;
  RunManifest manifest;
  nlohmann::json metrics;
};

/// Runs the requested stages, writing each stage's artifacts as soon as it
/// finishes and a manifest.json at the end. On failure the manifest is still
/// written (complete = false) and the error is rethrown tagged with the stage.
RunResult run_experiment(const ExperimentConfig& config, const std::filesystem::path& output_dir,
                         const RunOptions& options = {});

struct MetricDelta {
  std::string key;  // JSON pointer into metrics.json
  double a = 0.0;
  double b = 0.0;
  [[nodiscard]] double delta() const noexcept { return b - a; }
};

struct RunComparison {
  std::vector<MetricDelta> deltas;
  std::vector<std::string> keys_only_in_a;
  std::vector<std::string> keys_only_in_b;
  std::vector<std::string> differing_files;  // by digest, among files both runs list
  bool same_config = false;
};

/// Throws Io naming every missing manifest or metrics file.
RunComparison compare_runs(const std::filesystem::path& run_a, const std::filesystem::path& run_b);

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace pufsim
