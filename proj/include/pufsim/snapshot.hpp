#pragma once

#include <filesystem>
#include <string>

#include "pufsim/metrics.hpp"
#include "pufsim/population.hpp"
#include "pufsim/randomness.hpp"
#include "pufsim/signature.hpp"

// Binary layouts are little-endian. Every file opens with an 8-byte magic and
// a u32 format version; readers reject unknown versions.
//
// Signature set ("PUFSIG01", version 1):
//   u32 flags (bit 0: position mask, bit 1: device masks)
//   u64 devices, u64 trials, u64 n
//   [position mask: words(n) x u64]
//   [device masks:  devices x words(n) x u64]
//   payload: devices x trials rows, each words(n) x u64, row-major
//            (device outer, trial inner); bit p of a row is bit (p % 64) of
//            word (p / 64).
namespace pufsim::io {

inline constexpr std::uint32_t kSnapshotVersion = 1;

void write_population(const std::filesystem::path& path, const DevicePopulation& population);
DevicePopulation read_population(const std::filesystem::path& path);

void write_signatures(const std::filesystem::path& path, const SignatureSet& sigs);
SignatureSet read_signatures_file(const std::filesystem::path& path);
/// One row per (device, trial): "device,trial,bits" with bits as 0/1 characters.
void write_signatures_csv(const std::filesystem::path& path, const SignatureSet& sigs);

void write_golden(const std::filesystem::path& path, const GoldenSignature& golden);
GoldenSignature read_golden(const std::filesystem::path& path);

void write_histogram_csv(const std::filesystem::path& path, const Histogram& histogram);
void write_colormap_csv(const std::filesystem::path& path, const BitMatrix& colormap);

enum class SequenceFormat { Ascii, Packed };
/// ASCII '0'/'1' text (whitespace ignored) or packed bytes, most significant bit first.
nist::BitSequence read_sequence_file(const std::filesystem::path& path, SequenceFormat format);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace pufsim::io
