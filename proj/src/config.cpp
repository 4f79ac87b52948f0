#include "pufsim/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "pufsim/error.hpp"
#include "pufsim/rng.hpp"

namespace pufsim {

using nlohmann::json;

namespace {

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    fail(ErrorKind::Config, std::string("field '") + key + "': " + e.what());
  }
}

const json& require(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) fail(ErrorKind::Config, std::string("missing field '") + key + "'");
  return *it;
}

json axis_to_json(const std::vector<AxisAnchor>& axis) {
  json out = json::array();
  for (const auto& a : axis) out.push_back({a.coordinate, a.ber});
  return out;
}

std::vector<AxisAnchor> axis_from_json(const json& j) {
  std::vector<AxisAnchor> out;
  for (const auto& p : j) {
    if (!p.is_array() || p.size() != 2) fail(ErrorKind::Config, "calibration anchors are [coordinate, ber] pairs");
    out.push_back({p[0].get<double>(), p[1].get<double>()});
  }
  return out;
}

json session_to_json(const SessionConfig& s) { return {{"name", s.name}, {"env", env_to_json(s.env)}, {"trials", s.trials}}; }

SessionConfig session_from_json(const json& j, const std::string& default_name) {
  SessionConfig s;
  s.name = get_or<std::string>(j, "name", default_name);
  s.env = env_from_json(require(j, "env"));
  s.trials = get_or<std::size_t>(j, "trials", 1);
  return s;
}

std::string sequence_mode_name(SequenceMode m) {
  switch (m) {
    case SequenceMode::PerDevice: return "per_device";
    case SequenceMode::PerBoard: return "per_board";
    case SequenceMode::Concatenated: return "concatenated";
  }
  return "per_device";
}

SequenceMode sequence_mode_from_name(const std::string& s) {
  if (s == "per_device") return SequenceMode::PerDevice;
  if (s == "per_board") return SequenceMode::PerBoard;
  if (s == "concatenated") return SequenceMode::Concatenated;
  fail(ErrorKind::Config, "unknown sequence_mode '" + s + "'");
}

MismatchWeights local_only() { return {0.0, 0.0, 1.0}; }

MismatchWeights regional(double w_r) { return {0.0, w_r, std::sqrt(1.0 - w_r * w_r)}; }

}  // namespace

json env_to_json(const EnvironmentCondition& env) {
  return {{"temperature_celsius", env.temperature_celsius}, {"supply_voltage_volts", env.supply_voltage_volts}};
}

EnvironmentCondition env_from_json(const json& j) {
  EnvironmentCondition env;
  env.temperature_celsius = get_or<double>(j, "temperature_celsius", 25.0);
  env.supply_voltage_volts = get_or<double>(j, "supply_voltage_volts", 1.0);
  return env;
}

json calibration_to_json(const NoiseCalibration& c) {
  return {{"reference", env_to_json(c.reference)},
          {"temperature_axis", axis_to_json(c.temperature_axis)},
          {"voltage_axis", axis_to_json(c.voltage_axis)}};
}

NoiseCalibration calibration_from_json(const json& j, double sigma_mismatch) {
  NoiseCalibration c;
  c.sigma_mismatch = sigma_mismatch;
  c.reference = env_from_json(require(j, "reference"));
  c.temperature_axis = axis_from_json(require(j, "temperature_axis"));
  c.voltage_axis = axis_from_json(require(j, "voltage_axis"));
  return c;
}

json placement_to_json(const PlacementConfig& p) {
  if (p.kind != PlacementKind::Custom) return {{"kind", placement_kind_name(p.kind)}};
  json adjacency = json::array();
  for (auto [a, b] : p.adjacency) adjacency.push_back({a, b});
  return {{"kind", "custom"},
          {"grid_width", p.grid_width},
          {"grid_height", p.grid_height},
          {"regions", p.region_of_cell},
          {"adjacency", adjacency}};
}

PlacementConfig placement_from_json(const json& j) {
  const PlacementKind kind = placement_kind_from_name(get_or<std::string>(j, "kind", "custom"));
  if (kind != PlacementKind::Custom) return make_builtin_placement(kind);
  const auto w = get_or<std::uint32_t>(j, "grid_width", 0);
  const auto h = get_or<std::uint32_t>(j, "grid_height", 0);
  PlacementConfig p;
  if (j.contains("regions")) {
    p.grid_width = w;
    p.grid_height = h;
    p.region_of_cell = j.at("regions").get<std::vector<std::uint32_t>>();
  } else {
    p = make_independent_placement(w, h);
  }
  for (const auto& e : get_or<json>(j, "adjacency", json::array())) {
    p.adjacency.emplace_back(e.at(0).get<std::uint32_t>(), e.at(1).get<std::uint32_t>());
  }
  p.validate();
  return p;
}

json population_spec_to_json(const PopulationSpec& s) {
  json bias = json::array();
  for (const auto& [pos, offset] : s.bias_map) bias.push_back({{"row", pos.row}, {"col", pos.col}, {"offset", offset}});
  return {{"num_devices", s.num_devices},
          {"cells_per_device", s.cells_per_device},
          {"sigma_mismatch", s.sigma_mismatch},
          {"weights", {{"global", s.weights.global}, {"regional", s.weights.regional}, {"local", s.weights.local}}},
          {"placement", placement_to_json(s.placement)},
          {"bias", bias},
          {"master_seed", s.master_seed}};
}

PopulationSpec population_spec_from_json(const json& j) {
  PopulationSpec s;
  s.num_devices = require(j, "num_devices").get<std::size_t>();
  s.cells_per_device = require(j, "cells_per_device").get<std::size_t>();
  s.sigma_mismatch = require(j, "sigma_mismatch").get<double>();
  const json& w = require(j, "weights");
  s.weights = {w.at("global").get<double>(), w.at("regional").get<double>(), w.at("local").get<double>()};
  s.placement = placement_from_json(require(j, "placement"));
  for (const auto& b : get_or<json>(j, "bias", json::array())) {
    s.bias_map[{b.at("row").get<std::uint32_t>(), b.at("col").get<std::uint32_t>()}] = b.at("offset").get<double>();
  }
  s.master_seed = require(j, "master_seed").get<std::uint64_t>();
  return s;
}

void ExperimentConfig::validate() const {
  const auto dot = schema_version.find('.');
  int major = -1;
  try {
    major = std::stoi(schema_version.substr(0, dot));
  } catch (const std::exception&) {
    fail(ErrorKind::Config, "malformed schema_version '" + schema_version + "'");
  }
  if (major != kSchemaMajor) fail(ErrorKind::Config, "unsupported schema major version " + std::to_string(major));
  try {
    population_spec().validate();
    calibration.validate();
  } catch (const Error& e) {
    fail(ErrorKind::Config, e.what());
  }
  if (enroll.trials == 0) fail(ErrorKind::Config, "enroll session needs at least one trial");
  auto check_env = [&](const EnvironmentCondition& env, const std::string& what) {
    try {
      env.validate();
    } catch (const Error& e) {
      fail(ErrorKind::Config, what + ": " + e.what());
    }
    // Out-of-hull environments are reported by the readout stage itself.
    (void)what;
  };
  check_env(enroll.env, "enroll");
  std::set<std::string> names{enroll.name};
  for (const auto& s : sessions) {
    if (s.name.empty() || !names.insert(s.name).second) fail(ErrorKind::Config, "session names must be unique and non-empty");
    if (s.trials == 0) fail(ErrorKind::Config, "session '" + s.name + "' needs at least one trial");
    check_env(s.env, "session '" + s.name + "'");
  }
  for (const auto& e : metrics.sweep) check_env(e, "sweep");
  if (masking.enabled) {
    if (!(masking.bias_threshold > 0.0 && masking.bias_threshold <= 0.5)) fail(ErrorKind::Config, "bias_threshold must lie in (0, 0.5]");
    if (!(masking.stability_threshold > 0.5 && masking.stability_threshold <= 1.0)) {
      fail(ErrorKind::Config, "stability_threshold must lie in (0.5, 1]");
    }
  }
  if (metrics.regions_per_board == 0 || population.num_devices % metrics.regions_per_board != 0) {
    fail(ErrorKind::Config, "num_devices must be a multiple of regions_per_board");
  }
  if (!(metrics.histogram_bucket_percent > 0.0)) fail(ErrorKind::Config, "histogram bucket width must be positive");
  if (!(randomness.alpha > 0.0 && randomness.alpha < 1.0)) fail(ErrorKind::Config, "alpha must lie in (0, 1)");
  if (randomness.sequence_mode == SequenceMode::Concatenated && randomness.sequence_bits == 0) {
    fail(ErrorKind::Config, "sequence_bits must be positive");
  }
}

PopulationSpec ExperimentConfig::population_spec() const {
  PopulationSpec s;
  s.num_devices = population.num_devices;
  s.cells_per_device = population.cells_per_device;
  s.sigma_mismatch = population.sigma_mismatch;
  s.weights = population.weights;
  s.placement = population.placement;
  for (const auto& b : population.bias) s.bias_map[b.position] = b.offset_sigma * population.sigma_mismatch;
  s.master_seed = rng::derive_seed(master_seed, 1);
  return s;
}

json to_json(const ExperimentConfig& c) {
  json bias = json::array();
  for (const auto& b : c.population.bias) {
    bias.push_back({{"row", b.position.row}, {"col", b.position.col}, {"offset_sigma", b.offset_sigma}});
  }
  json sessions = json::array();
  for (const auto& s : c.sessions) sessions.push_back(session_to_json(s));
  json sweep = json::array();
  for (const auto& e : c.metrics.sweep) sweep.push_back(env_to_json(e));
  json tests = json::array();
  for (auto t : c.randomness.tests) tests.push_back(std::string(nist::test_name(t)));
  const auto& w = c.population.weights;
  return {
      {"schema_version", c.schema_version},
      {"master_seed", c.master_seed},
      {"output_dir", c.output_dir},
      {"population",
       {{"num_devices", c.population.num_devices},
        {"cells_per_device", c.population.cells_per_device},
        {"sigma_mismatch", c.population.sigma_mismatch},
        {"weights", {{"global", w.global}, {"regional", w.regional}, {"local", w.local}}},
        {"placement", placement_to_json(c.population.placement)},
        {"bias", bias}}},
      {"calibration", calibration_to_json(c.calibration)},
      {"readout", {{"enroll", session_to_json(c.enroll)}, {"sessions", sessions}}},
      {"signature",
       {{"masking", c.masking.enabled},
        {"bias_threshold", c.masking.bias_threshold},
        {"stability_threshold", c.masking.stability_threshold},
        {"device_masks", c.masking.device_masks}}},
      {"metrics",
       {{"histogram_bucket_percent", c.metrics.histogram_bucket_percent},
        {"colormap", c.metrics.colormap},
        {"regions_per_board", c.metrics.regions_per_board},
        {"sweep", sweep},
        {"sweep_trials", c.metrics.sweep_trials}}},
      {"randomness",
       {{"enabled", c.randomness.enabled},
        {"alpha", c.randomness.alpha},
        {"tests", tests},
        {"sequence_mode", sequence_mode_name(c.randomness.sequence_mode)},
        {"sequence_bits", c.randomness.sequence_bits},
        {"block_size", c.randomness.block_size},
        {"fixture_mode", c.randomness.fixture_mode}}},
  };
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  try {
    c.schema_version = require(j, "schema_version").get<std::string>();
    c.master_seed = get_or<std::uint64_t>(j, "master_seed", 0);
    c.output_dir = get_or<std::string>(j, "output_dir", c.output_dir);

    const json& pop = require(j, "population");
    c.population.num_devices = require(pop, "num_devices").get<std::size_t>();
    c.population.cells_per_device = require(pop, "cells_per_device").get<std::size_t>();
    c.population.sigma_mismatch = get_or<double>(pop, "sigma_mismatch", 0.25);
    if (pop.contains("weights")) {
      const json& w = pop.at("weights");
      c.population.weights = {get_or<double>(w, "global", 0.0), get_or<double>(w, "regional", 0.0),
                              get_or<double>(w, "local", 0.0)};
    }
    c.population.placement = placement_from_json(require(pop, "placement"));
    for (const auto& b : get_or<json>(pop, "bias", json::array())) {
      c.population.bias.push_back({{b.at("row").get<std::uint32_t>(), b.at("col").get<std::uint32_t>()},
                                   b.at("offset_sigma").get<double>()});
    }

    c.calibration = calibration_from_json(require(j, "calibration"), c.population.sigma_mismatch);

    const json& readout = require(j, "readout");
    c.enroll = session_from_json(require(readout, "enroll"), "enroll");
    std::size_t i = 0;
    for (const auto& s : get_or<json>(readout, "sessions", json::array())) {
      c.sessions.push_back(session_from_json(s, "session" + std::to_string(i++)));
    }

    const json sig = get_or<json>(j, "signature", json::object());
    c.masking.enabled = get_or<bool>(sig, "masking", false);
    c.masking.bias_threshold = get_or<double>(sig, "bias_threshold", 0.3);
    c.masking.stability_threshold = get_or<double>(sig, "stability_threshold", 0.9);
    c.masking.device_masks = get_or<bool>(sig, "device_masks", true);

    const json met = get_or<json>(j, "metrics", json::object());
    c.metrics.histogram_bucket_percent = get_or<double>(met, "histogram_bucket_percent", 1.0);
    c.metrics.colormap = get_or<bool>(met, "colormap", true);
    c.metrics.regions_per_board = get_or<std::size_t>(met, "regions_per_board", 1);
    for (const auto& e : get_or<json>(met, "sweep", json::array())) c.metrics.sweep.push_back(env_from_json(e));
    c.metrics.sweep_trials = get_or<std::size_t>(met, "sweep_trials", 1);

    const json rnd = get_or<json>(j, "randomness", json::object());
    c.randomness.enabled = get_or<bool>(rnd, "enabled", true);
    c.randomness.alpha = get_or<double>(rnd, "alpha", nist::kDefaultAlpha);
    if (rnd.contains("tests")) {
      c.randomness.tests.clear();
      for (const auto& t : rnd.at("tests")) c.randomness.tests.push_back(nist::test_from_name(t.get<std::string>()));
    }
    c.randomness.sequence_mode = sequence_mode_from_name(get_or<std::string>(rnd, "sequence_mode", "per_device"));
    c.randomness.sequence_bits = get_or<std::size_t>(rnd, "sequence_bits", 100000);
    c.randomness.block_size = get_or<std::size_t>(rnd, "block_size", 128);
    c.randomness.fixture_mode = get_or<bool>(rnd, "fixture_mode", false);
  } catch (const json::exception& e) {
    fail(ErrorKind::Config, e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Config) throw;
    fail(ErrorKind::Config, e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::Config, path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

NoiseCalibration paper_temperature_calibration(double sigma_mismatch) {
  NoiseCalibration c;
  c.sigma_mismatch = sigma_mismatch;
  c.reference = {25.0, 1.0};
  c.temperature_axis = {{0.0, 0.0837}, {20.0, 0.0123}, {25.0, 0.0}, {45.0, 0.0603}, {65.0, 0.1149}, {85.0, 0.1589}};
  c.voltage_axis = {{1.0, 0.0}};
  return c;
}

NoiseCalibration paper_voltage_calibration(double sigma_mismatch) {
  NoiseCalibration c;
  c.sigma_mismatch = sigma_mismatch;
  c.reference = {25.0, 3.3};
  c.temperature_axis = {{25.0, 0.0}};
  c.voltage_axis = {{1.96, 0.13}, {2.0, 0.12}, {2.2, 0.04}, {2.5, 0.023}, {2.65, 0.025}, {3.0, 0.026}, {3.3, 0.0}};
  return c;
}

namespace {

ExperimentConfig placement_study(PlacementKind kind) {
  ExperimentConfig c;
  c.output_dir = "pufsim-out/" + placement_kind_name(kind);
  c.population.num_devices = 10;
  c.population.cells_per_device = 1024;
  c.population.weights = regional(0.3);
  c.population.placement = make_builtin_placement(kind);
  c.calibration = noiseless_calibration(c.population.sigma_mismatch, {25.0, 3.3});
  c.enroll = {"enroll", {25.0, 3.3}, 1};
  c.randomness.sequence_mode = SequenceMode::PerDevice;
  // A 1024-bit signature holds one 32x32 rank matrix; the minimum-length
  // rules are relaxed so every test runs on every signature.
  c.randomness.fixture_mode = true;
  return c;
}

}  // namespace

ExperimentConfig preset(const std::string& name) {
  ExperimentConfig c;
  if (name == "paper-sim") {
    c.output_dir = "pufsim-out/paper-sim";
    c.population.num_devices = 10000;
    c.population.cells_per_device = 64;
    c.population.weights = local_only();
    c.population.placement = make_independent_placement(8, 8);
    c.calibration = paper_temperature_calibration(c.population.sigma_mismatch);
    c.enroll = {"enroll", {25.0, 1.0}, 1};
    c.metrics.sweep = {{0.0, 1.0}, {20.0, 1.0}, {45.0, 1.0}, {65.0, 1.0}, {85.0, 1.0}};
    c.randomness.sequence_mode = SequenceMode::Concatenated;
    c.randomness.sequence_bits = 100000;
  } else if (name == "paper-fpga") {
    c.output_dir = "pufsim-out/paper-fpga";
    c.population.num_devices = 50;  // 10 boards x 5 regions
    c.population.cells_per_device = 1024;
    c.population.weights = regional(0.3);
    c.population.placement = make_d4_nonadjacent64x16();
    // Bottom LUTs of each LAB column carry a systematic delay bias.
    for (std::uint32_t row = 12; row < 16; ++row) {
      for (std::uint32_t col = 0; col < 64; ++col) c.population.bias.push_back({{row, col}, 0.5});
    }
    c.calibration.sigma_mismatch = c.population.sigma_mismatch;
    c.calibration.reference = {25.0, 3.3};
    c.calibration.temperature_axis = {{25.0, 0.0307}};
    c.calibration.voltage_axis = {{3.3, 0.0307}};
    c.enroll = {"enroll", {25.0, 3.3}, 4};
    c.sessions = {{"nominal", {25.0, 3.3}, 4}};
    c.masking = {true, 0.1, 0.9, true};
    c.metrics.regions_per_board = 5;
    c.randomness.sequence_mode = SequenceMode::PerBoard;
  } else if (name == "paper-voltage") {
    c.output_dir = "pufsim-out/paper-voltage";
    c.population.num_devices = 1000;
    c.population.cells_per_device = 128;
    c.population.weights = local_only();
    c.population.placement = make_independent_placement(16, 8);
    c.calibration = paper_voltage_calibration(c.population.sigma_mismatch);
    c.enroll = {"enroll", {25.0, 3.3}, 1};
    c.metrics.sweep = {{25.0, 3.0}, {25.0, 2.65}, {25.0, 2.5}, {25.0, 2.2}, {25.0, 2.0}, {25.0, 1.96}};
    c.randomness.enabled = false;
  } else if (name == "d1") {
    c = placement_study(PlacementKind::D1Clustered);
  } else if (name == "d2") {
    c = placement_study(PlacementKind::D2Grid32x32);
  } else if (name == "d3") {
    c = placement_study(PlacementKind::D3Adjacent64x16);
  } else if (name == "d4") {
    c = placement_study(PlacementKind::D4NonAdjacent64x16);
  } else if (name == "minimal") {
    c.output_dir = "pufsim-out/minimal";
    c.population.num_devices = 2;
    c.population.cells_per_device = 4;
    c.population.weights = local_only();
    c.population.placement = make_independent_placement(4, 1);
    c.calibration = noiseless_calibration(c.population.sigma_mismatch, {25.0, 1.0});
    c.enroll = {"enroll", {25.0, 1.0}, 1};
    c.randomness.enabled = false;
  } else {
    fail(ErrorKind::Config, "unknown preset '" + name + "'");
  }
  c.validate();
  return c;
}

std::vector<std::string> preset_names() {
  return {"paper-sim", "paper-fpga", "paper-voltage", "d1", "d2", "d3", "d4", "minimal"};
}

void apply_seed(ExperimentConfig& config, std::uint64_t seed) { config.master_seed = seed; }

}  // namespace pufsim
