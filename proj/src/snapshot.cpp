#include "pufsim/snapshot.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "json.hpp"

#include "pufsim/config.hpp"
#include "pufsim/error.hpp"

namespace pufsim::io {

namespace {

constexpr std::array<char, 8> kPopulationMagic{'P', 'U', 'F', 'P', 'O', 'P', '0', '1'};
constexpr std::array<char, 8> kSignatureMagic{'P', 'U', 'F', 'S', 'I', 'G', '0', '1'};
constexpr std::array<char, 8> kGoldenMagic{'P', 'U', 'F', 'G', 'L', 'D', '0', '1'};

static_assert(std::endian::native == std::endian::little, "snapshot I/O assumes a little-endian host");

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  }
  template <class T>
  void put(T v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof v);
  }
  template <class T>
  void put_span(std::span<const T> v) {
    out_.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size_bytes()));
  }
  void put_magic(const std::array<char, 8>& m) {
    out_.write(m.data(), m.size());
    put<std::uint32_t>(kSnapshotVersion);
  }
  void put_string(const std::string& s) {
    put<std::uint64_t>(s.size());
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void finish() {
    out_.flush();
    if (!out_) fail(ErrorKind::Io, "write failed: " + path_.string());
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) fail(ErrorKind::Io, "cannot open " + path.string());
  }
  template <class T>
  T get() {
    T v{};
    read(&v, sizeof v);
    return v;
  }
  template <class T>
  void get_span(std::span<T> v) {
    read(v.data(), v.size_bytes());
  }
  void expect_magic(const std::array<char, 8>& m) {
    std::array<char, 8> got{};
    read(got.data(), got.size());
    if (got != m) fail(ErrorKind::Io, path_.string() + ": not a " + std::string(m.data(), 6) + " file");
    const auto version = get<std::uint32_t>();
    if (version != kSnapshotVersion) {
      fail(ErrorKind::Io, path_.string() + ": unsupported format version " + std::to_string(version));
    }
  }
  std::string get_string() {
    const auto n = get<std::uint64_t>();
    if (n > (1u << 30)) fail(ErrorKind::Io, path_.string() + ": corrupt string length");
    std::string s(n, '\0');
    read(s.data(), n);
    return s;
  }
  void expect_end() {
    if (in_.peek() != std::char_traits<char>::eof()) fail(ErrorKind::Io, path_.string() + ": trailing bytes");
  }

 private:
  void read(void* dst, std::size_t n) {
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) fail(ErrorKind::Io, path_.string() + ": truncated file");
  }

  std::filesystem::path path_;
  std::ifstream in_;
};

void check_size(std::uint64_t a, std::uint64_t b, const std::filesystem::path& path) {
  if (a != 0 && b > (std::uint64_t{1} << 40) / a) fail(ErrorKind::Io, path.string() + ": implausible dimensions");
}

}  // namespace

void write_population(const std::filesystem::path& path, const DevicePopulation& population) {
  Writer w(path);
  w.put_magic(kPopulationMagic);
  w.put_string(population_spec_to_json(population.spec()).dump());
  for (const CellParams& c : population.cells()) {
    w.put(c.global_component);
    w.put(c.regional_component);
    w.put(c.local_component);
  }
  w.finish();
}

DevicePopulation read_population(const std::filesystem::path& path) {
  Reader r(path);
  r.expect_magic(kPopulationMagic);
  PopulationSpec spec;
  try {
    spec = population_spec_from_json(nlohmann::json::parse(r.get_string()));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Io, path.string() + ": bad population header: " + e.what());
  }
  spec.validate();
  check_size(spec.num_devices, spec.cells_per_device, path);
  std::vector<CellParams> cells(spec.num_devices * spec.cells_per_device);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const std::size_t c = i % spec.cells_per_device;
    cells[i].global_component = r.get<double>();
    cells[i].regional_component = r.get<double>();
    cells[i].local_component = r.get<double>();
    cells[i].position = spec.placement.position_of(c);
    cells[i].region = spec.placement.region_of_cell[c];
  }
  r.expect_end();
  return DevicePopulation(std::move(spec), std::move(cells));
}

void write_signatures(const std::filesystem::path& path, const SignatureSet& sigs) {
  Writer w(path);
  w.put_magic(kSignatureMagic);
  std::uint32_t flags = 0;
  if (sigs.position_mask()) flags |= 1u;
  if (sigs.device_masks()) flags |= 2u;
  w.put(flags);
  w.put<std::uint64_t>(sigs.devices());
  w.put<std::uint64_t>(sigs.trials());
  w.put<std::uint64_t>(sigs.n());
  if (sigs.position_mask()) w.put_span(sigs.position_mask()->words());
  if (sigs.device_masks()) w.put_span(sigs.device_masks()->data());
  w.put_span(sigs.bits().data());
  w.finish();
}

SignatureSet read_signatures_file(const std::filesystem::path& path) {
  Reader r(path);
  r.expect_magic(kSignatureMagic);
  const auto flags = r.get<std::uint32_t>();
  if (flags & ~3u) fail(ErrorKind::Io, path.string() + ": unknown flags");
  const auto devices = r.get<std::uint64_t>();
  const auto trials = r.get<std::uint64_t>();
  const auto n = r.get<std::uint64_t>();
  check_size(devices, trials, path);
  check_size(devices * trials, n, path);
  SignatureSet sigs(devices, trials, n);
  std::optional<BitVector> pos;
  std::optional<BitMatrix> dev;
  if (flags & 1u) {
    pos.emplace(n);
    r.get_span(pos->words());
  }
  if (flags & 2u) {
    dev.emplace(devices, n);
    r.get_span(dev->data());
  }
  r.get_span(sigs.bits().data());
  r.expect_end();
  if (pos) sigs.set_position_mask(std::move(pos));
  if (dev) sigs.set_device_masks(std::move(dev));
  return sigs;
}

void write_signatures_csv(const std::filesystem::path& path, const SignatureSet& sigs) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out << "device,trial,bits\n";
  std::string line;
  for (std::size_t d = 0; d < sigs.devices(); ++d) {
    for (std::size_t t = 0; t < sigs.trials(); ++t) {
      line.assign(sigs.n(), '0');
      for (std::size_t p = 0; p < sigs.n(); ++p) {
        if (sigs.bit(d, t, p)) line[p] = '1';
      }
      out << d << ',' << t << ',' << line << '\n';
    }
  }
  if (!out) fail(ErrorKind::Io, "write failed: " + path.string());
}

void write_golden(const std::filesystem::path& path, const GoldenSignature& golden) {
  Writer w(path);
  w.put_magic(kGoldenMagic);
  w.put<std::uint64_t>(golden.devices());
  w.put<std::uint64_t>(golden.n());
  w.put_span(golden.bits.data());
  w.put_span(std::span<const double>(golden.stability));
  w.finish();
}

GoldenSignature read_golden(const std::filesystem::path& path) {
  Reader r(path);
  r.expect_magic(kGoldenMagic);
  const auto devices = r.get<std::uint64_t>();
  const auto n = r.get<std::uint64_t>();
  check_size(devices, n, path);
  GoldenSignature g{BitMatrix(devices, n), std::vector<double>(devices * n)};
  r.get_span(g.bits.data());
  r.get_span(std::span<double>(g.stability));
  r.expect_end();
  return g;
}

void write_histogram_csv(const std::filesystem::path& path, const Histogram& histogram) {
  std::ostringstream out;
  out << "bucket_start_percent,bucket_end_percent,count\n";
  for (std::size_t k = 0; k < histogram.counts.size(); ++k) {
    out << histogram.bucket_start(k) << ',' << histogram.bucket_start(k + 1) << ',' << histogram.counts[k] << '\n';
  }
  write_text(path, out.str());
}

void write_colormap_csv(const std::filesystem::path& path, const BitMatrix& colormap) {
  std::string text;
  text.reserve(colormap.rows() * (2 * colormap.cols() + 1));
  for (std::size_t r = 0; r < colormap.rows(); ++r) {
    for (std::size_t c = 0; c < colormap.cols(); ++c) {
      if (c) text += ',';
      text += colormap.get(r, c) ? '1' : '0';
    }
    text += '\n';
  }
  write_text(path, text);
}

nist::BitSequence read_sequence_file(const std::filesystem::path& path, SequenceFormat format) {
  const std::string raw = read_text(path);
  if (format == SequenceFormat::Ascii) return nist::BitSequence::from_string(raw);
  std::vector<std::uint8_t> bits;
  bits.reserve(raw.size() * 8);
  for (unsigned char byte : raw) {
    for (int b = 7; b >= 0; --b) bits.push_back(static_cast<std::uint8_t>((byte >> b) & 1u));
  }
  return nist::BitSequence(std::move(bits));
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) fail(ErrorKind::Io, "write failed: " + path.string());
}

}  // namespace pufsim::io
