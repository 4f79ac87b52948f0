#include "pufsim/config.hpp"

#include <gtest/gtest.h>

#include <filesystem>

#include "pufsim/error.hpp"
#include "pufsim/snapshot.hpp"

namespace pufsim {
namespace {

ExperimentConfig rich_config() {
  ExperimentConfig c = preset("paper-fpga");
  c.master_seed = 0xDEADBEEFCAFEull;
  c.sessions.push_back({"hot", {85.0, 3.3}, 2});
  c.calibration.temperature_axis = {{25.0, 0.0307}, {85.0, 0.1}};
  c.metrics.sweep = {{85.0, 3.3}};
  c.randomness.tests = {nist::TestId::Runs, nist::TestId::Fft};
  c.randomness.sequence_mode = SequenceMode::Concatenated;
  c.randomness.sequence_bits = 4096;
  c.population.placement = make_independent_placement(32, 32);
  c.population.placement.kind = PlacementKind::Custom;
  c.population.placement.adjacency = {{0, 1}, {5, 9}};
  c.population.bias = {{{31, 0}, 0.25}};
  return c;
}

TEST(Config, RoundTripOfEveryPreset) {
  for (const auto& name : preset_names()) {
    const ExperimentConfig c = preset(name);
    EXPECT_EQ(config_from_json(to_json(c)), c) << name;
    EXPECT_EQ(config_from_json(nlohmann::json::parse(to_json(c).dump())), c) << name;
  }
}

TEST(Config, RoundTripOfCustomPlacementAndSessions) {
  const ExperimentConfig c = rich_config();
  EXPECT_EQ(config_from_json(nlohmann::json::parse(to_json(c).dump(2))), c);
}

TEST(Config, LoadFromFile) {
  const auto path = std::filesystem::temp_directory_path() / "pufsim_config_test.json";
  io::write_text(path, to_json(rich_config()).dump(2));
  EXPECT_EQ(load_config(path), rich_config());
  std::filesystem::remove(path);
  EXPECT_THROW(load_config(path), Error);
}

TEST(Config, RejectsUnknownSchemaMajor) {
  nlohmann::json j = to_json(preset("minimal"));
  j["schema_version"] = "2.0";
  try {
    config_from_json(j);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Config);
  }
  j["schema_version"] = "1.7";
  EXPECT_NO_THROW(config_from_json(j));
  j["schema_version"] = "x";
  EXPECT_THROW(config_from_json(j), Error);
}

TEST(Config, RejectsInconsistentSections) {
  auto expect_config_error = [](nlohmann::json j) {
    try {
      config_from_json(j);
      ADD_FAILURE() << j.dump();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::Config) << e.what();
    }
  };
  const nlohmann::json base = to_json(preset("minimal"));

  nlohmann::json j = base;
  j["population"]["cells_per_device"] = 5;
  expect_config_error(j);

  j = base;
  j["population"]["weights"]["local"] = 0.5;
  expect_config_error(j);

  j = base;
  j["readout"]["sessions"] = {{{"name", "enroll"}, {"env", {{"temperature_celsius", 25}}}}};
  expect_config_error(j);

  j = base;
  j["signature"]["masking"] = true;
  j["signature"]["bias_threshold"] = 0.7;
  expect_config_error(j);

  j = base;
  j["metrics"]["regions_per_board"] = 3;
  expect_config_error(j);

  j = base;
  j["randomness"]["tests"] = {"Frequency", "Serial"};
  expect_config_error(j);

  j = base;
  j["calibration"]["temperature_axis"] = {{25.0, 0.7}};
  expect_config_error(j);

  j = base;
  j.erase("population");
  expect_config_error(j);

  expect_config_error(nlohmann::json::parse(R"({"schema_version": "1.0"})"));
}

TEST(Config, SeedOverrideChangesPopulationSeedOnly) {
  ExperimentConfig c = preset("d2");
  const PopulationSpec before = c.population_spec();
  apply_seed(c, 77);
  const PopulationSpec after = c.population_spec();
  EXPECT_NE(before.master_seed, after.master_seed);
  PopulationSpec a = before, b = after;
  a.master_seed = b.master_seed = 0;
  EXPECT_EQ(a, b);
}

TEST(Config, BiasIsScaledBySigma) {
  ExperimentConfig c = preset("paper-fpga");
  const PopulationSpec spec = c.population_spec();
  EXPECT_EQ(spec.bias_map.size(), 4u * 64u);
  EXPECT_DOUBLE_EQ(spec.bias_map.at({15, 0}), 0.5 * 0.25);
}

TEST(Config, PaperPresetsCoverTheirSessions) {
  for (const auto& name : preset_names()) {
    const ExperimentConfig c = preset(name);
    EXPECT_TRUE(c.calibration.contains(c.enroll.env)) << name;
    for (const auto& s : c.sessions) EXPECT_TRUE(c.calibration.contains(s.env)) << name << " " << s.name;
    for (const auto& e : c.metrics.sweep) EXPECT_TRUE(c.calibration.contains(e)) << name;
  }
  const ExperimentConfig sim = preset("paper-sim");
  EXPECT_EQ(sim.population.num_devices * sim.population.cells_per_device, 640000u);
  const ExperimentConfig fpga = preset("paper-fpga");
  EXPECT_EQ(fpga.population.num_devices / fpga.metrics.regions_per_board, 10u);
  EXPECT_EQ(fpga.sessions.at(0).trials, 4u);
  EXPECT_THROW(preset("d5"), Error);
}

}  // namespace
}  // namespace pufsim
