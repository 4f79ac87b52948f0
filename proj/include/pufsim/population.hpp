#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace pufsim {

struct Position {
  std::uint32_t row = 0;
  std::uint32_t col = 0;
  friend auto operator<=>(const Position&, const Position&) = default;
};

enum class PlacementKind { D1Clustered, D2Grid32x32, D3Adjacent64x16, D4NonAdjacent64x16, Custom };

std::string placement_kind_name(PlacementKind kind);
PlacementKind placement_kind_from_name(const std::string& name);

/// Floor plan of one device: a grid of cells partitioned into regions, plus
/// a symmetric, irreflexive adjacency relation between regions.
struct PlacementConfig {
  PlacementKind kind = PlacementKind::Custom;
  std::uint32_t grid_width = 0;
  std::uint32_t grid_height = 0;
  std::vector<std::uint32_t> region_of_cell;  // row-major cell index -> region id
  std::vector<std::pair<std::uint32_t, std::uint32_t>> adjacency;  // each edge once, first < second

  [[nodiscard]] std::size_t cell_count() const noexcept {
    return static_cast<std::size_t>(grid_width) * grid_height;
  }
  [[nodiscard]] std::uint32_t region_count() const noexcept;
  [[nodiscard]] Position position_of(std::size_t cell) const noexcept {
    return {static_cast<std::uint32_t>(cell / grid_width), static_cast<std::uint32_t>(cell % grid_width)};
  }
  [[nodiscard]] std::size_t index_of(Position p) const noexcept {
    return static_cast<std::size_t>(p.row) * grid_width + p.col;
  }
  /// Throws InvalidSpec; also canonicalizes nothing, so callers build edges sorted.
  void validate() const;

  friend bool operator==(const PlacementConfig&, const PlacementConfig&) = default;
};

PlacementConfig make_d1_clustered();
PlacementConfig make_d2_grid32x32();
PlacementConfig make_d3_adjacent64x16();
PlacementConfig make_d4_nonadjacent64x16();
PlacementConfig make_builtin_placement(PlacementKind kind);
/// width x height cells, every cell its own region, no adjacency.
PlacementConfig make_independent_placement(std::uint32_t grid_width, std::uint32_t grid_height);

/// Fraction of unordered cell pairs of one device that share a region or
/// sit in adjacent regions.
double regional_overlap_score(const PlacementConfig& placement);

struct MismatchWeights {
  double global = 0.0;
  double regional = 0.3;
  double local = 0.9539392014169456;  // sqrt(1 - 0.3^2)
  friend bool operator==(const MismatchWeights&, const MismatchWeights&) = default;
};

using BiasMap = std::map<Position, double>;

struct PopulationSpec {
  std::size_t num_devices = 0;
  std::size_t cells_per_device = 0;
  double sigma_mismatch = 0.25;
  MismatchWeights weights;
  PlacementConfig placement;
  BiasMap bias_map;  // systematic offsets in mismatch units
  std::uint64_t master_seed = 0;

  void validate() const;
  friend bool operator==(const PopulationSpec&, const PopulationSpec&) = default;
};

/// Per-cell mismatch decomposition. Components are stored in mismatch units
/// (each ~ N(0, sigma^2)); the static mismatch is their weighted sum.
struct CellParams {
  double global_component = 0.0;
  double regional_component = 0.0;
  double local_component = 0.0;
  Position position;
  std::uint32_t region = 0;
};

class DevicePopulation {
 public:
  DevicePopulation(PopulationSpec spec, std::vector<CellParams> cells);

  [[nodiscard]] const PopulationSpec& spec() const noexcept { return spec_; }
  [[nodiscard]] std::size_t num_devices() const noexcept { return spec_.num_devices; }
  [[nodiscard]] std::size_t cells_per_device() const noexcept { return spec_.cells_per_device; }

  [[nodiscard]] std::span<const CellParams> device(std::size_t d) const noexcept {
    return std::span<const CellParams>(cells_).subspan(d * spec_.cells_per_device, spec_.cells_per_device);
  }
  [[nodiscard]] std::span<const CellParams> cells() const noexcept { return cells_; }

  /// Weighted total static mismatch of one cell.
  [[nodiscard]] double mismatch(std::size_t device, std::size_t cell) const noexcept {
    return mismatch_[device * spec_.cells_per_device + cell];
  }
  [[nodiscard]] std::span<const double> device_mismatch(std::size_t d) const noexcept {
    return std::span<const double>(mismatch_).subspan(d * spec_.cells_per_device, spec_.cells_per_device);
  }
  /// Systematic offset applied at readout, per cell position.
  [[nodiscard]] std::span<const double> offsets() const noexcept { return offsets_; }

  friend bool operator==(const DevicePopulation& a, const DevicePopulation& b) {
    return a.spec_ == b.spec_ && a.mismatch_ == b.mismatch_ && a.offsets_ == b.offsets_;
  }

 private:
  friend DevicePopulation inject_position_bias(const DevicePopulation&, const BiasMap&);

  PopulationSpec spec_;
  std::vector<CellParams> cells_;
  std::vector<double> mismatch_;
  std::vector<double> offsets_;
};

DevicePopulation generate_population(const PopulationSpec& spec);

/// Returns a copy whose listed positions carry the given systematic offsets;
/// unlisted positions keep their current offset.
DevicePopulation inject_position_bias(const DevicePopulation& population, const BiasMap& bias_map);

}  // namespace pufsim
