#include "pufsim/experiment.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iomanip>
#include <memory>
#include <optional>
#include <set>
#include <sstream>

#include "pufsim/error.hpp"
#include "pufsim/metrics.hpp"
#include "pufsim/parallel.hpp"
#include "pufsim/rng.hpp"
#include "pufsim/snapshot.hpp"

namespace pufsim {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kEnrollSeedTag = 2;
constexpr std::uint64_t kSweepSeedTag = 3;
constexpr std::uint64_t kSessionSeedTagBase = 100;

const std::array<std::pair<Stage, const char*>, 7> kStageNames{{
    {Stage::Generate, "generate"},
    {Stage::Enroll, "enroll"},
    {Stage::Readout, "readout"},
    {Stage::Mask, "mask"},
    {Stage::Metrics, "metrics"},
    {Stage::Sweep, "sweep"},
    {Stage::Nist, "nist"},
}};

std::string safe_name(const std::string& name) {
  std::string out = name;
  for (char& c : out) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' || c == '_';
    if (!ok) c = '_';
  }
  return out;
}

std::string format6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// Mutable state shared by the stages of one run.
class Pipeline {
 public:
  Pipeline(const ExperimentConfig& config, fs::path out) : config_(config), out_(std::move(out)) {}

  void run(const std::vector<Stage>& stages) {
    fs::create_directories(out_);
    const std::string config_text = to_json(config_).dump(2) + "\n";
    manifest_.config_sha256 = sha256_hex(config_text);
    manifest_.master_seed = config_.master_seed;
    write_file("config.json", config_text);

    for (Stage stage : stages) {
      const auto start = std::chrono::steady_clock::now();
      try {
        run_stage(stage);
      } catch (const std::exception& e) {
        manifest_.failed_stage = stage_name(stage);
        manifest_.error = e.what();
        finalize();
        const ErrorKind kind = dynamic_cast<const Error*>(&e) ? static_cast<const Error&>(e).kind() : ErrorKind::Io;
        fail(kind, "[" + stage_name(stage) + "] " + e.what());
      }
      const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
      manifest_.timings.push_back({stage_name(stage), elapsed.count()});
    }
    manifest_.complete = true;
    finalize();
  }

  [[nodiscard]] RunResult result() const { return {out_, manifest_, metrics_}; }

 private:
  void run_stage(Stage stage) {
    switch (stage) {
      case Stage::Generate: return generate();
      case Stage::Enroll: return enroll();
      case Stage::Readout: return readout();
      case Stage::Mask: return mask();
      case Stage::Metrics: return compute_metrics();
      case Stage::Sweep: return sweep();
      case Stage::Nist: return nist();
    }
  }

  void generate() {
    population_.emplace(generate_population(config_.population_spec()));
    io::write_population(track("population.bin"), *population_);
    metrics_["population"] = {
        {"devices", population_->num_devices()},
        {"cells_per_device", population_->cells_per_device()},
        {"placement", placement_kind_name(config_.population.placement.kind)},
        {"regional_overlap_score", regional_overlap_score(config_.population.placement)},
    };
  }

  ReadoutSession session_for(const SessionConfig& s, std::uint64_t tag) const {
    return {s.env, s.trials, rng::derive_seed(config_.master_seed, tag), config_.calibration};
  }

  void enroll() {
    require_population();
    enroll_.emplace(read_signatures(*population_, session_for(config_.enroll, kEnrollSeedTag)));
    io::write_signatures(track("signatures_enroll.bin"), *enroll_);
    io::write_signatures_csv(track("signatures_enroll.csv"), *enroll_);
    golden_.emplace(enroll_golden(*enroll_));
    io::write_golden(track("golden.bin"), *golden_);
  }

  void readout() {
    require_population();
    sessions_.clear();
    for (std::size_t i = 0; i < config_.sessions.size(); ++i) {
      const SessionConfig& s = config_.sessions[i];
      sessions_.push_back(read_signatures(*population_, session_for(s, kSessionSeedTagBase + i)));
      const std::string stem = "signatures_" + safe_name(s.name);
      io::write_signatures(track(stem + ".bin"), sessions_.back());
      io::write_signatures_csv(track(stem + ".csv"), sessions_.back());
    }
  }

  void mask() {
    if (!config_.masking.enabled) return;
    require_golden();
    position_mask_ = eliminate_biased_positions(*enroll_, config_.masking.bias_threshold,
                                                config_.masking.stability_threshold);
    if (config_.masking.device_masks) {
      device_masks_ = mask_unstable_cells(*golden_, config_.masking.stability_threshold);
    }
    std::ostringstream csv;
    csv << "position,row,col,kept\n";
    const PlacementConfig& placement = config_.population.placement;
    for (std::size_t p = 0; p < position_mask_->size(); ++p) {
      const Position pos = placement.position_of(p);
      csv << p << ',' << pos.row << ',' << pos.col << ',' << ((*position_mask_)[p] ? 1 : 0) << '\n';
    }
    write_file("mask_positions.csv", csv.str());
    io::write_signatures(track("signatures_golden_masked.bin"), masked(golden_->as_signature_set()));
  }

  SignatureSet masked(const SignatureSet& sigs) const {
    SignatureSet out = sigs;
    if (position_mask_) out.set_position_mask(*position_mask_);
    if (device_masks_) out.set_device_masks(*device_masks_);
    return out;
  }

  void compute_metrics() {
    require_golden();
    const double width = config_.metrics.histogram_bucket_percent;
    const SignatureSet golden_set = golden_->as_signature_set();
    const bool use_masks = position_mask_.has_value();

    json enroll_json;
    enroll_json["env"] = env_to_json(config_.enroll.env);
    enroll_json["trials"] = config_.enroll.trials;
    const OnesSummary ones = ones_fraction_and_colormap(golden_set, 0);
    enroll_json["ones_fraction"] = ones.ones_fraction;
    if (config_.metrics.colormap) io::write_colormap_csv(track("colormap.csv"), ones.colormap);

    if (golden_set.devices() >= 2) {
      const InterHdResult raw = inter_hd(golden_set, 0, width);
      enroll_json["inter_hd_percent_unmasked"] = raw.inter_hd_percent;
      enroll_json["pairs"] = raw.pairs;
      InterHdResult reported = raw;
      if (use_masks) {
        reported = inter_hd(masked(golden_set), 0, width);
        enroll_json["inter_hd_percent_masked"] = reported.inter_hd_percent;
      }
      enroll_json["inter_hd_percent"] = reported.inter_hd_percent;
      enroll_json["histogram_mode_bucket_percent"] = reported.histogram.bucket_start(reported.histogram.mode_bucket());
      io::write_histogram_csv(track("histogram.csv"), reported.histogram);
    }
    metrics_["enroll"] = enroll_json;

    if (use_masks) {
      const SignatureSet m = masked(golden_set);
      double kept = 0.0;
      for (std::size_t d = 0; d < m.devices(); ++d) kept += static_cast<double>(m.keep_mask(d).count());
      metrics_["masking"] = {
          {"bias_threshold", config_.masking.bias_threshold},
          {"stability_threshold", config_.masking.stability_threshold},
          {"kept_positions", position_mask_->count()},
          {"mean_kept_cells_per_device", kept / static_cast<double>(m.devices())},
      };
    }

    json sessions = json::array();
    std::ostringstream csv;
    csv << "session,device,board,intra_hd_percent" << (use_masks ? ",intra_hd_percent_masked" : "") << '\n';
    const std::size_t per_board = config_.metrics.regions_per_board;
    for (std::size_t i = 0; i < sessions_.size(); ++i) {
      const SessionConfig& cfg = config_.sessions[i];
      const std::vector<double> raw = intra_hd_per_device(sessions_[i], *golden_);
      std::vector<double> with_masks;
      if (use_masks) with_masks = intra_hd_per_device(masked(sessions_[i]), *golden_);
      const std::vector<double>& reported = use_masks ? with_masks : raw;
      for (std::size_t d = 0; d < raw.size(); ++d) {
        csv << safe_name(cfg.name) << ',' << d << ',' << d / per_board << ',' << format6(raw[d]);
        if (use_masks) csv << ',' << format6(with_masks[d]);
        csv << '\n';
      }
      json boards = json::array();
      for (std::size_t b = 0; b * per_board < reported.size(); ++b) {
        boards.push_back(mean_of(std::span<const double>(reported).subspan(b * per_board, per_board)));
      }
      json s = {
          {"name", cfg.name},
          {"env", env_to_json(cfg.env)},
          {"trials", cfg.trials},
          {"intra_hd_percent", mean_of(reported)},
          {"intra_hd_percent_unmasked", mean_of(raw)},
          {"expected_ber_percent", expected_ber_percent(cfg.env)},
      };
      if (per_board > 1) s["per_board_intra_hd_percent"] = boards;
      sessions.push_back(s);
    }
    metrics_["sessions"] = sessions;
    if (!sessions_.empty()) write_file("intra_hd_per_device.csv", csv.str());
    write_metrics();
  }

  double expected_ber_percent(const EnvironmentCondition& env) const {
    return 100.0 * expected_flip_probability(config_.calibration.sigma_mismatch,
                                             noise_sigma_at(config_.calibration, env));
  }

  void sweep() {
    if (config_.metrics.sweep.empty()) return;
    require_population();
    SweepOptions options;
    options.trials = config_.metrics.sweep_trials;
    options.enroll_trials = config_.enroll.trials;
    options.seed = rng::derive_seed(config_.master_seed, kSweepSeedTag);
    const auto points = robustness_sweep(*population_, config_.calibration, config_.metrics.sweep, options);
    json out = json::array();
    std::ostringstream csv;
    csv << "temperature_celsius,supply_voltage_volts,intra_hd_percent,expected_ber_percent\n";
    for (const SweepPoint& p : points) {
      out.push_back({{"env", env_to_json(p.env)},
                     {"intra_hd_percent", p.intra_hd_percent},
                     {"expected_ber_percent", p.expected_ber_percent}});
      csv << format6(p.env.temperature_celsius) << ',' << format6(p.env.supply_voltage_volts) << ','
          << format6(p.intra_hd_percent) << ',' << format6(p.expected_ber_percent) << '\n';
    }
    metrics_["sweep"] = out;
    write_file("sweep.csv", csv.str());
    write_metrics();
  }

  std::vector<nist::BitSequence> sequences() const {
    // Masked-out cells are dropped from the streams.
    const SignatureSet g = masked(golden_->as_signature_set());
    std::vector<std::uint8_t> stream;
    auto append_row = [&](std::size_t d) {
      const BitVector keep = g.keep_mask(d);
      for (std::size_t p = 0; p < g.n(); ++p) {
        if (keep[p]) stream.push_back(g.bit(d, 0, p) ? 1 : 0);
      }
    };
    std::vector<nist::BitSequence> out;
    switch (config_.randomness.sequence_mode) {
      case SequenceMode::PerDevice:
        for (std::size_t d = 0; d < g.devices(); ++d) {
          stream.clear();
          append_row(d);
          out.emplace_back(stream);
        }
        break;
      case SequenceMode::PerBoard: {
        const std::size_t k = config_.metrics.regions_per_board;
        for (std::size_t b = 0; b * k < g.devices(); ++b) {
          stream.clear();
          for (std::size_t d = b * k; d < (b + 1) * k; ++d) append_row(d);
          out.emplace_back(stream);
        }
        break;
      }
      case SequenceMode::Concatenated: {
        for (std::size_t d = 0; d < g.devices(); ++d) append_row(d);
        const std::size_t len = config_.randomness.sequence_bits;
        for (std::size_t start = 0; start + len <= stream.size(); start += len) {
          out.emplace_back(std::vector<std::uint8_t>(stream.begin() + static_cast<std::ptrdiff_t>(start),
                                                     stream.begin() + static_cast<std::ptrdiff_t>(start + len)));
        }
        break;
      }
    }
    return out;
  }

  void nist() {
    if (!config_.randomness.enabled) return;
    require_golden();
    const std::vector<nist::BitSequence> seqs = sequences();
    if (seqs.empty()) fail(ErrorKind::InsufficientLength, "the signatures are too short to form one sequence");
    nist::TestOptions options;
    options.alpha = config_.randomness.alpha;
    options.block_size = config_.randomness.block_size;
    options.fixture_mode = config_.randomness.fixture_mode;
    std::vector<std::vector<nist::TestResult>> results(seqs.size());
    parallel_for(seqs.size(), [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) results[i] = nist::run_suite(seqs[i], config_.randomness.tests, options);
    });

    std::ostringstream csv;
    csv << "sequence,test,p_values,pass\n";
    for (std::size_t i = 0; i < results.size(); ++i) {
      for (const auto& r : results[i]) {
        csv << i << ',' << nist::test_name(r.test) << ',';
        for (std::size_t k = 0; k < r.p_values.size(); ++k) csv << (k ? ";" : "") << format6(r.p_values[k]);
        csv << ',' << (r.pass ? 1 : 0) << '\n';
      }
    }
    write_file("nist.csv", csv.str());

    json rnd = {{"sequences", seqs.size()}, {"sequence_bits", seqs.front().size()}, {"alpha", options.alpha}};
    std::set<nist::TestId> skipped(config_.randomness.tests.begin(), config_.randomness.tests.end());
    for (const auto& r : results.front()) skipped.erase(r.test);
    json skipped_json = json::array();
    for (auto t : skipped) skipped_json.push_back(std::string(nist::test_name(t)));
    rnd["skipped_tests"] = skipped_json;
    if (seqs.size() >= 2) {
      const nist::SuiteAggregate agg = nist::aggregate_suite(results, options.alpha);
      std::ostringstream acsv;
      acsv << "test,passing,total,uniformity_p\n";
      json tests = json::object();
      for (const auto& [id, a] : agg) {
        const std::string name(nist::test_name(id));
        tests[name] = {{"passing", a.passing}, {"total", a.total}, {"uniformity_p", a.uniformity_p}};
        acsv << name << ',' << a.passing << ',' << a.total << ',' << format6(a.uniformity_p) << '\n';
      }
      rnd["tests"] = tests;
      write_file("nist_aggregate.csv", acsv.str());
    } else {
      json tests = json::object();
      for (const auto& r : results.front()) {
        tests[std::string(nist::test_name(r.test))] = {{"p_values", r.p_values}, {"pass", r.pass}};
      }
      rnd["tests"] = tests;
    }
    metrics_["randomness"] = rnd;
    write_metrics();
  }

  void require_population() {
    if (!population_) generate();
  }

  void require_golden() {
    if (!golden_) enroll();
  }

  fs::path track(const std::string& name) {
    if (std::find(files_.begin(), files_.end(), name) == files_.end()) files_.push_back(name);
    return out_ / name;
  }

  void write_file(const std::string& name, const std::string& text) { io::write_text(track(name), text); }

  void write_metrics() {
    json m = metrics_;
    m["tool_version"] = kToolVersion;
    m["master_seed"] = config_.master_seed;
    m["config_sha256"] = manifest_.config_sha256;
    write_file("metrics.json", m.dump(2) + "\n");
  }

  std::string report() const {
    std::ostringstream out;
    out << "pufsim " << kToolVersion << "  seed " << config_.master_seed << "\n";
    const json flat = metrics_.flatten();
    for (const auto& [key, value] : flat.items()) {
      out << key << " = ";
      if (value.is_number_float()) {
        out << format6(value.get<double>());
      } else {
        out << value.dump();
      }
      out << '\n';
    }
    return out.str();
  }

  void finalize() {
    try {
      if (!metrics_.empty()) write_metrics();
      write_file("report.txt", report());
      manifest_.files.clear();
      for (const auto& name : files_) {
        const fs::path p = out_ / name;
        if (!fs::exists(p)) continue;
        manifest_.files.push_back({name, sha256_file(p), static_cast<std::uint64_t>(fs::file_size(p))});
      }
      io::write_text(out_ / "manifest.json", manifest_to_json(manifest_).dump(2) + "\n");
    } catch (const std::exception&) {
      if (manifest_.complete) throw;
      // Keep the original stage error; the manifest is best effort here.
    }
  }

  const ExperimentConfig& config_;
  fs::path out_;
  RunManifest manifest_;
  json metrics_ = json::object();
  std::vector<std::string> files_;
  std::optional<DevicePopulation> population_;
  std::optional<SignatureSet> enroll_;
  std::optional<GoldenSignature> golden_;
  std::vector<SignatureSet> sessions_;
  std::optional<BitVector> position_mask_;
  std::optional<BitMatrix> device_masks_;
};

json read_json(const fs::path& path) {
  try {
    return json::parse(io::read_text(path));
  } catch (const json::exception& e) {
    fail(ErrorKind::Io, path.string() + ": " + e.what());
  }
}

}  // namespace

std::string stage_name(Stage stage) {
  for (auto [s, name] : kStageNames) {
    if (s == stage) return name;
  }
  return "unknown";
}

Stage stage_from_name(const std::string& name) {
  for (auto [s, n] : kStageNames) {
    if (name == n) return s;
  }
  fail(ErrorKind::InvalidArgument, "unknown stage '" + name + "'");
}

std::vector<Stage> all_stages() {
  return {Stage::Generate, Stage::Enroll, Stage::Readout, Stage::Mask, Stage::Metrics, Stage::Sweep, Stage::Nist};
}

std::vector<Stage> stages_for(Stage target) {
  switch (target) {
    case Stage::Generate: return {Stage::Generate};
    case Stage::Enroll: return {Stage::Generate, Stage::Enroll};
    case Stage::Readout: return {Stage::Generate, Stage::Enroll, Stage::Readout};
    case Stage::Mask: return {Stage::Generate, Stage::Enroll, Stage::Mask};
    case Stage::Metrics: return {Stage::Generate, Stage::Enroll, Stage::Readout, Stage::Mask, Stage::Metrics};
    case Stage::Sweep: return {Stage::Generate, Stage::Sweep};
    case Stage::Nist: return {Stage::Generate, Stage::Enroll, Stage::Nist};
  }
  return all_stages();
}

json manifest_to_json(const RunManifest& m) {
  json files = json::array();
  for (const auto& f : m.files) files.push_back({{"name", f.name}, {"sha256", f.sha256}, {"size", f.size}});
  json timings = json::array();
  for (const auto& t : m.timings) timings.push_back({{"stage", t.stage}, {"seconds", t.seconds}});
  json out = {{"tool_version", m.tool_version}, {"config_sha256", m.config_sha256}, {"master_seed", m.master_seed},
              {"files", files}, {"timings", timings}, {"status", m.complete ? "complete" : "incomplete"}};
  if (!m.complete) {
    out["failed_stage"] = m.failed_stage;
    out["error"] = m.error;
  }
  return out;
}

RunManifest manifest_from_json(const json& j) {
  RunManifest m;
  try {
    m.tool_version = j.at("tool_version").get<std::string>();
    m.config_sha256 = j.at("config_sha256").get<std::string>();
    m.master_seed = j.at("master_seed").get<std::uint64_t>();
    for (const auto& f : j.at("files")) {
      m.files.push_back({f.at("name").get<std::string>(), f.at("sha256").get<std::string>(), f.at("size").get<std::uint64_t>()});
    }
    for (const auto& t : j.at("timings")) m.timings.push_back({t.at("stage").get<std::string>(), t.at("seconds").get<double>()});
    m.complete = j.at("status").get<std::string>() == "complete";
    m.failed_stage = j.value("failed_stage", "");
    m.error = j.value("error", "");
  } catch (const json::exception& e) {
    fail(ErrorKind::Io, std::string("malformed manifest: ") + e.what());
  }
  return m;
}

RunResult run_experiment(const ExperimentConfig& config, const fs::path& output_dir, const RunOptions& options) {
  config.validate();
  Pipeline pipeline(config, output_dir);
  pipeline.run(options.stages);
  return pipeline.result();
}

RunComparison compare_runs(const fs::path& run_a, const fs::path& run_b) {
  std::vector<std::string> missing;
  for (const fs::path& dir : {run_a, run_b}) {
    for (const char* name : {"manifest.json", "metrics.json"}) {
      if (!fs::exists(dir / name)) missing.push_back((dir / name).string());
    }
  }
  if (!missing.empty()) {
    std::string msg = "missing run files:";
    for (const auto& m : missing) msg += " " + m;
    fail(ErrorKind::Io, msg);
  }
  const RunManifest ma = manifest_from_json(read_json(run_a / "manifest.json"));
  const RunManifest mb = manifest_from_json(read_json(run_b / "manifest.json"));
  const json fa = read_json(run_a / "metrics.json").flatten();
  const json fb = read_json(run_b / "metrics.json").flatten();

  RunComparison out;
  out.same_config = ma.config_sha256 == mb.config_sha256;
  for (const auto& [key, va] : fa.items()) {
    const auto it = fb.find(key);
    if (it == fb.end()) {
      out.keys_only_in_a.push_back(key);
    } else if (va.is_number() && it->is_number()) {
      out.deltas.push_back({key, va.get<double>(), it->get<double>()});
    }
  }
  for (const auto& [key, vb] : fb.items()) {
    if (!fa.contains(key)) out.keys_only_in_b.push_back(key);
  }
  for (const auto& f : ma.files) {
    for (const auto& g : mb.files) {
      if (f.name == g.name && f.sha256 != g.sha256) out.differing_files.push_back(f.name);
    }
  }
  return out;
}

namespace {

struct DigestState {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx{EVP_MD_CTX_new(), &EVP_MD_CTX_free};
  DigestState() {
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) fail(ErrorKind::Io, "sha256 init failed");
  }
  void update(const void* data, std::size_t n) {
    if (EVP_DigestUpdate(ctx.get(), data, n) != 1) fail(ErrorKind::Io, "sha256 update failed");
  }
  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx.get(), md.data(), &len) != 1) fail(ErrorKind::Io, "sha256 final failed");
    std::ostringstream out;
    for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    return out.str();
  }
};

}  // namespace

std::string sha256_hex(std::string_view data) {
  DigestState s;
  s.update(data.data(), data.size());
  return s.hex();
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  DigestState s;
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    s.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return s.hex();
}

}  // namespace pufsim
