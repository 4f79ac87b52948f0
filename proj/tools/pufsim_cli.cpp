#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "pufsim/config.hpp"
#include "pufsim/error.hpp"
#include "pufsim/experiment.hpp"
#include "pufsim/parallel.hpp"
#include "pufsim/randomness.hpp"
#include "pufsim/snapshot.hpp"

namespace {

struct CommonOptions {
  std::string config_path;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::string out;
  unsigned threads = 0;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  auto* cfg = cmd->add_option("--config", o.config_path, "experiment config (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--preset", o.preset, "built-in preset")->excludes(cfg);
  cmd->add_option("--seed", o.seed, "master seed, overrides the config");
  cmd->add_option("--out", o.out, "output directory (default: $PUFSIM_OUT_DIR, then the config's output_dir)");
  cmd->add_option("--threads", o.threads, "worker threads, 0 = all cores");
}

pufsim::ExperimentConfig resolve_config(const CommonOptions& o) {
  pufsim::ExperimentConfig config;
  if (!o.config_path.empty()) {
    config = pufsim::load_config(o.config_path);
  } else if (!o.preset.empty()) {
    config = pufsim::preset(o.preset);
  } else {
    pufsim::fail(pufsim::ErrorKind::Config, "one of --config or --preset is required");
  }
  if (o.seed) pufsim::apply_seed(config, *o.seed);
  return config;
}

std::string resolve_out(const CommonOptions& o, const pufsim::ExperimentConfig& config) {
  if (!o.out.empty()) return o.out;
  if (const char* env = std::getenv("PUFSIM_OUT_DIR"); env != nullptr && *env != '\0') return env;
  return config.output_dir;
}

int run_stages(const CommonOptions& o, std::vector<pufsim::Stage> stages) {
  pufsim::set_thread_count(o.threads);
  const pufsim::ExperimentConfig config = resolve_config(o);
  const std::string out = resolve_out(o, config);
  const pufsim::RunResult result = pufsim::run_experiment(config, out, {std::move(stages)});
  std::cout << "wrote " << result.manifest.files.size() << " files to " << out << "\n";
  if (result.metrics.contains("enroll") && result.metrics["enroll"].contains("inter_hd_percent")) {
    std::cout << "inter-HD " << result.metrics["enroll"]["inter_hd_percent"].get<double>() << " %\n";
  }
  return 0;
}

int run_compare(const std::string& a, const std::string& b) {
  const pufsim::RunComparison cmp = pufsim::compare_runs(a, b);
  std::cout << "config " << (cmp.same_config ? "identical" : "differs") << "\n";
  std::cout << "metric,a,b,delta\n";
  for (const auto& d : cmp.deltas) {
    std::cout << d.key << ',' << d.a << ',' << d.b << ',' << d.delta() << "\n";
  }
  for (const auto& k : cmp.keys_only_in_a) std::cout << "only in a: " << k << "\n";
  for (const auto& k : cmp.keys_only_in_b) std::cout << "only in b: " << k << "\n";
  for (const auto& f : cmp.differing_files) std::cout << "content differs: " << f << "\n";
  return 0;
}

int run_sequence_file(const std::string& path, const std::string& format, double alpha, bool fixture) {
  const auto seq = pufsim::io::read_sequence_file(
      path, format == "packed" ? pufsim::io::SequenceFormat::Packed : pufsim::io::SequenceFormat::Ascii);
  pufsim::nist::TestOptions options;
  options.alpha = alpha;
  options.fixture_mode = fixture;
  std::cout << "test,p_values,pass\n";
  for (const auto& r : pufsim::nist::run_suite(seq, pufsim::nist::kAllTests, options)) {
    std::cout << pufsim::nist::test_name(r.test) << ',';
    for (std::size_t i = 0; i < r.p_values.size(); ++i) std::cout << (i ? ";" : "") << r.p_values[i];
    std::cout << ',' << (r.pass ? "PASS" : "FAIL") << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MeL-PUF population simulator"};
  app.require_subcommand(1);
  CommonOptions common;

  struct StageCommand {
    const char* name;
    const char* help;
    pufsim::Stage stage;
  };
  const StageCommand stage_commands[] = {
      {"generate", "sample a device population", pufsim::Stage::Generate},
      {"enroll", "read the enrollment session and build golden signatures", pufsim::Stage::Enroll},
      {"readout", "read every evaluation session", pufsim::Stage::Readout},
      {"mask", "compute position and per-device masks", pufsim::Stage::Mask},
      {"metrics", "inter-HD, intra-HD, ones fraction, histograms", pufsim::Stage::Metrics},
      {"sweep", "robustness sweep over the configured environments", pufsim::Stage::Sweep},
  };
  std::vector<std::pair<CLI::App*, pufsim::Stage>> stage_apps;
  for (const auto& sc : stage_commands) {
    auto* cmd = app.add_subcommand(sc.name, sc.help);
    add_common(cmd, common);
    stage_apps.emplace_back(cmd, sc.stage);
  }

  auto* nist_cmd = app.add_subcommand("nist", "randomness suite on golden signatures, or on --input");
  add_common(nist_cmd, common);
  std::string input, format = "ascii";
  double alpha = pufsim::nist::kDefaultAlpha;
  bool fixture = false;
  nist_cmd->add_option("--input", input, "test a bit sequence file instead of a simulated run")->check(CLI::ExistingFile);
  nist_cmd->add_option("--format", format, "ascii or packed")->check(CLI::IsMember({"ascii", "packed"}));
  nist_cmd->add_option("--alpha", alpha, "significance level for --input");
  nist_cmd->add_flag("--fixture-mode", fixture, "ignore recommended minimum lengths for --input");

  auto* run_cmd = app.add_subcommand("run", "full pipeline");
  add_common(run_cmd, common);

  auto* compare_cmd = app.add_subcommand("compare", "metric deltas between two run directories");
  std::string run_a, run_b;
  compare_cmd->add_option("run_a", run_a)->required();
  compare_cmd->add_option("run_b", run_b)->required();

  auto* presets_cmd = app.add_subcommand("presets", "list built-in presets");
  auto* show_cmd = app.add_subcommand("show-config", "print the resolved config as JSON");
  add_common(show_cmd, common);

  CLI11_PARSE(app, argc, argv);

  std::string stage = "cli";
  try {
    for (const auto& [cmd, st] : stage_apps) {
      if (*cmd) return run_stages(common, pufsim::stages_for(st));
    }
    if (*nist_cmd) {
      if (!input.empty()) {
        stage = "nist";
        return run_sequence_file(input, format, alpha, fixture);
      }
      return run_stages(common, pufsim::stages_for(pufsim::Stage::Nist));
    }
    if (*run_cmd) return run_stages(common, pufsim::all_stages());
    if (*compare_cmd) {
      stage = "compare";
      return run_compare(run_a, run_b);
    }
    if (*presets_cmd) {
      for (const auto& name : pufsim::preset_names()) std::cout << name << "\n";
      return 0;
    }
    if (*show_cmd) {
      std::cout << pufsim::to_json(resolve_config(common)).dump(2) << "\n";
      return 0;
    }
  } catch (const pufsim::Error& e) {
    // Pipeline errors already carry their stage tag.
    const std::string what = e.what();
    std::cerr << "pufsim: " << (what.starts_with("[") ? "" : "[" + stage + "] ") << what << " ("
              << pufsim::to_string(e.kind()) << ")\n";
    return e.kind() == pufsim::ErrorKind::Config ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "pufsim: [" << stage << "] " << e.what() << "\n";
    return 1;
  }
  return 0;
}
