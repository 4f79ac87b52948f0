#include "pufsim/population.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "pufsim/error.hpp"
#include "pufsim/parallel.hpp"
#include "pufsim/rng.hpp"

namespace pufsim {

std::string placement_kind_name(PlacementKind kind) {
  switch (kind) {
    case PlacementKind::D1Clustered: return "d1";
    case PlacementKind::D2Grid32x32: return "d2";
    case PlacementKind::D3Adjacent64x16: return "d3";
    case PlacementKind::D4NonAdjacent64x16: return "d4";
    case PlacementKind::Custom: return "custom";
  }
  return "custom";
}

PlacementKind placement_kind_from_name(const std::string& name) {
  if (name == "d1" || name == "D1_clustered") return PlacementKind::D1Clustered;
  if (name == "d2" || name == "D2_32x32") return PlacementKind::D2Grid32x32;
  if (name == "d3" || name == "D3_64x16_adjacent") return PlacementKind::D3Adjacent64x16;
  if (name == "d4" || name == "D4_64x16_nonadjacent") return PlacementKind::D4NonAdjacent64x16;
  if (name == "custom") return PlacementKind::Custom;
  fail(ErrorKind::InvalidSpec, "unknown placement kind '" + name + "'");
}

std::uint32_t PlacementConfig::region_count() const noexcept {
  if (region_of_cell.empty()) return 0;
  return *std::max_element(region_of_cell.begin(), region_of_cell.end()) + 1;
}

void PlacementConfig::validate() const {
  if (grid_width == 0 || grid_height == 0) fail(ErrorKind::InvalidSpec, "placement grid must be non-empty");
  if (region_of_cell.size() != cell_count()) {
    fail(ErrorKind::InvalidSpec, "placement must assign exactly one region to every cell");
  }
  const std::uint32_t regions = region_count();
  std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
  for (auto [a, b] : adjacency) {
    if (a == b) fail(ErrorKind::InvalidSpec, "adjacency must be irreflexive");
    if (a >= regions || b >= regions) fail(ErrorKind::InvalidSpec, "adjacency references an unknown region");
    if (!seen.insert(std::minmax(a, b)).second) fail(ErrorKind::InvalidSpec, "duplicate adjacency edge");
  }
}

PlacementConfig make_d1_clustered() {
  PlacementConfig p;
  p.kind = PlacementKind::D1Clustered;
  p.grid_width = 32;
  p.grid_height = 32;
  p.region_of_cell.assign(p.cell_count(), 0);
  return p;
}

PlacementConfig make_d2_grid32x32() {
  PlacementConfig p;
  p.kind = PlacementKind::D2Grid32x32;
  p.grid_width = 32;
  p.grid_height = 32;
  p.region_of_cell.resize(p.cell_count());
  for (std::size_t c = 0; c < p.cell_count(); ++c) p.region_of_cell[c] = p.position_of(c).row / 2;
  for (std::uint32_t r = 0; r + 1 < 16; ++r) p.adjacency.emplace_back(r, r + 1);
  return p;
}

namespace {
// 64 columns x 16 rows; each column is one 16-cell region.
PlacementConfig column_regions_64x16(PlacementKind kind, bool adjacent) {
  PlacementConfig p;
  p.kind = kind;
  p.grid_width = 64;
  p.grid_height = 16;
  p.region_of_cell.resize(p.cell_count());
  for (std::size_t c = 0; c < p.cell_count(); ++c) p.region_of_cell[c] = p.position_of(c).col;
  if (adjacent) {
    for (std::uint32_t r = 0; r + 1 < 64; ++r) p.adjacency.emplace_back(r, r + 1);
  }
  return p;
}
}  // namespace

PlacementConfig make_d3_adjacent64x16() { return column_regions_64x16(PlacementKind::D3Adjacent64x16, true); }
PlacementConfig make_d4_nonadjacent64x16() { return column_regions_64x16(PlacementKind::D4NonAdjacent64x16, false); }

PlacementConfig make_builtin_placement(PlacementKind kind) {
  switch (kind) {
    case PlacementKind::D1Clustered: return make_d1_clustered();
    case PlacementKind::D2Grid32x32: return make_d2_grid32x32();
    case PlacementKind::D3Adjacent64x16: return make_d3_adjacent64x16();
    case PlacementKind::D4NonAdjacent64x16: return make_d4_nonadjacent64x16();
    case PlacementKind::Custom: break;
  }
  fail(ErrorKind::InvalidSpec, "custom placement has no built-in layout");
}

PlacementConfig make_independent_placement(std::uint32_t grid_width, std::uint32_t grid_height) {
  PlacementConfig p;
  p.kind = PlacementKind::Custom;
  p.grid_width = grid_width;
  p.grid_height = grid_height;
  p.region_of_cell.resize(p.cell_count());
  for (std::size_t c = 0; c < p.cell_count(); ++c) p.region_of_cell[c] = static_cast<std::uint32_t>(c);
  return p;
}

double regional_overlap_score(const PlacementConfig& placement) {
  placement.validate();
  const std::size_t n = placement.cell_count();
  if (n < 2) return 1.0;
  std::vector<std::uint64_t> size(placement.region_count(), 0);
  for (auto r : placement.region_of_cell) ++size[r];
  std::uint64_t related = 0;
  for (auto s : size) related += s * (s - 1) / 2;
  for (auto [a, b] : placement.adjacency) related += size[a] * size[b];
  const auto pairs = static_cast<std::uint64_t>(n) * (n - 1) / 2;
  return static_cast<double>(related) / static_cast<double>(pairs);
}

void PopulationSpec::validate() const {
  if (num_devices == 0 || cells_per_device == 0) fail(ErrorKind::InvalidSpec, "population sizes must be positive");
  if (num_devices > 0xFFFFFFFFu || cells_per_device > 0xFFFFFFFFu) {
    fail(ErrorKind::InvalidSpec, "population sizes exceed 32-bit stream addressing");
  }
  if (!(sigma_mismatch > 0.0) || !std::isfinite(sigma_mismatch)) {
    fail(ErrorKind::InvalidSpec, "sigma_mismatch must be positive");
  }
  const MismatchWeights& w = weights;
  if (!(w.global >= 0.0 && w.regional >= 0.0 && w.local >= 0.0)) {
    fail(ErrorKind::InvalidSpec, "mismatch weights must be non-negative");
  }
  if (std::abs(w.global * w.global + w.regional * w.regional + w.local * w.local - 1.0) > 1e-9) {
    fail(ErrorKind::InvalidSpec, "mismatch weights must satisfy w_g^2 + w_r^2 + w_l^2 = 1");
  }
  placement.validate();
  if (placement.cell_count() != cells_per_device) {
    fail(ErrorKind::InvalidSpec, "placement grid size does not match cells_per_device");
  }
  for (const auto& [pos, offset] : bias_map) {
    if (pos.row >= placement.grid_height || pos.col >= placement.grid_width) {
      fail(ErrorKind::InvalidSpec, "bias map references a position outside the grid");
    }
    if (!std::isfinite(offset)) fail(ErrorKind::InvalidSpec, "bias offsets must be finite");
  }
}

DevicePopulation::DevicePopulation(PopulationSpec spec, std::vector<CellParams> cells)
    : spec_(std::move(spec)), cells_(std::move(cells)) {
  spec_.validate();
  if (cells_.size() != spec_.num_devices * spec_.cells_per_device) {
    fail(ErrorKind::InvalidSpec, "cell count does not match the population spec");
  }
  const MismatchWeights& w = spec_.weights;
  mismatch_.resize(cells_.size());
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    const CellParams& c = cells_[i];
    mismatch_[i] = w.global * c.global_component + w.regional * c.regional_component + w.local * c.local_component;
  }
  offsets_.assign(spec_.cells_per_device, 0.0);
  for (const auto& [pos, offset] : spec_.bias_map) offsets_[spec_.placement.index_of(pos)] = offset;
}

DevicePopulation generate_population(const PopulationSpec& spec) {
  spec.validate();
  const PlacementConfig& placement = spec.placement;
  const std::uint32_t regions = placement.region_count();
  std::vector<std::vector<std::uint32_t>> edges_of(regions);
  for (std::uint32_t e = 0; e < placement.adjacency.size(); ++e) {
    edges_of[placement.adjacency[e].first].push_back(e);
    edges_of[placement.adjacency[e].second].push_back(e);
  }

  const rng::CounterRng rng(spec.master_seed);
  const double sigma = spec.sigma_mismatch;
  const std::size_t cpd = spec.cells_per_device;
  std::vector<CellParams> cells(spec.num_devices * cpd);

  parallel_for(spec.num_devices, [&](std::size_t begin, std::size_t end) {
    std::vector<double> edge_draw(placement.adjacency.size());
    std::vector<double> regional(regions);
    for (std::size_t d = begin; d < end; ++d) {
      const auto dev = static_cast<std::uint32_t>(d);
      const double global = sigma * rng.normal(dev, 0, 0, rng::Stream::Global);
      for (std::uint32_t e = 0; e < edge_draw.size(); ++e) edge_draw[e] = rng.normal(dev, e, 0, rng::Stream::RegionEdge);
      for (std::uint32_t r = 0; r < regions; ++r) {
        const double own = rng.normal(dev, r, 0, rng::Stream::RegionOwn);
        const auto& edges = edges_of[r];
        if (edges.empty()) {
          regional[r] = sigma * own;
          continue;
        }
        // Half the regional variance is private, half is split evenly over the
        // region's adjacency edges; adjacent regions share one edge draw.
        double shared = 0.0;
        for (auto e : edges) shared += edge_draw[e];
        regional[r] = sigma * (std::sqrt(0.5) * own + std::sqrt(0.5 / static_cast<double>(edges.size())) * shared);
      }
      for (std::size_t c = 0; c < cpd; ++c) {
        CellParams& cell = cells[d * cpd + c];
        cell.region = placement.region_of_cell[c];
        cell.position = placement.position_of(c);
        cell.global_component = global;
        cell.regional_component = regional[cell.region];
        cell.local_component = sigma * rng.normal(dev, static_cast<std::uint32_t>(c), 0, rng::Stream::Local);
      }
    }
  });
  return DevicePopulation(spec, std::move(cells));
}

DevicePopulation inject_position_bias(const DevicePopulation& population, const BiasMap& bias_map) {
  const PlacementConfig& placement = population.spec().placement;
  for (const auto& [pos, offset] : bias_map) {
    if (pos.row >= placement.grid_height || pos.col >= placement.grid_width) {
      fail(ErrorKind::InvalidArgument, "bias position (" + std::to_string(pos.row) + ", " + std::to_string(pos.col) +
                                           ") is not on the grid");
    }
    if (!std::isfinite(offset)) fail(ErrorKind::InvalidArgument, "bias offsets must be finite");
  }
  DevicePopulation out = population;
  for (const auto& [pos, offset] : bias_map) {
    out.spec_.bias_map[pos] = offset;
    out.offsets_[placement.index_of(pos)] = offset;
  }
  return out;
}

}  // namespace pufsim
