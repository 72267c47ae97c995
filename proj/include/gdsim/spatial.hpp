#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "gdsim/simulation.hpp"

namespace gdsim {

enum class RasterTopology { VonNeumann, Moore };

/// Grid whose cells are ordinary agents. Indices are 0-based and linearized
/// row-major (last dimension fastest).
struct RasterMap {
  std::string name;
  std::vector<std::size_t> dims;
  AgentTypeTag cell_type;
  std::vector<AgentId> index_to_id;

  std::size_t size() const { return index_to_id.size(); }

  std::size_t linear(std::span<const std::int64_t> index, bool wrap = false) const {
    if (index.size() != dims.size()) {
      fail(ErrorCode::IndexOutOfBounds, "raster '" + name + "' has " + std::to_string(dims.size()) + " dimensions");
    }
    std::size_t lin = 0;
    for (std::size_t d = 0; d < dims.size(); ++d) {
      const auto extent = static_cast<std::int64_t>(dims[d]);
      std::int64_t i = index[d];
      if (wrap) i = ((i % extent) + extent) % extent;
      if (i < 0 || i >= extent) {
        fail(ErrorCode::IndexOutOfBounds, "index " + std::to_string(index[d]) + " outside extent " +
                                              std::to_string(extent) + " of raster '" + name + "'");
      }
      lin = lin * dims[d] + static_cast<std::size_t>(i);
    }
    return lin;
  }

  std::vector<std::int64_t> cartesian(std::size_t lin) const {
    std::vector<std::int64_t> out(dims.size());
    for (std::size_t d = dims.size(); d-- > 0;) {
      out[d] = static_cast<std::int64_t>(lin % dims[d]);
      lin /= dims[d];
    }
    return out;
  }
};

using CellInit = std::function<std::vector<Value>(std::span<const std::int64_t> index)>;

/// Creates one cell agent per grid position, in row-major order.
inline const RasterMap& add_raster(Simulation& sim, const std::string& name, std::vector<std::size_t> dims,
                                   AgentTypeTag cell_type, const CellInit& cell_init = {}) {
  sim.schema().agent(cell_type);
  if (dims.empty()) fail(ErrorCode::InvalidArgument, "raster '" + name + "' needs at least one dimension");
  for (auto d : dims) {
    if (d < 1) fail(ErrorCode::InvalidArgument, "raster '" + name + "' has a zero extent");
  }
  if (sim.find_raster(name)) fail(ErrorCode::DuplicateRasterName, "'" + name + "'");
  auto raster = std::make_shared<RasterMap>();
  raster->name = name;
  raster->dims = std::move(dims);
  raster->cell_type = cell_type;
  const std::size_t n =
      std::accumulate(raster->dims.begin(), raster->dims.end(), std::size_t{1}, std::multiplies<>{});
  raster->index_to_id.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (cell_init) {
      const auto idx = raster->cartesian(i);
      const auto state = cell_init(idx);
      raster->index_to_id.push_back(sim.add_agent(cell_type, state));
    } else {
      raster->index_to_id.push_back(sim.add_agent(cell_type, std::span<const Value>{}));
    }
  }
  sim.register_raster(name, raster);
  return *raster;
}

inline const RasterMap& raster(const Simulation& sim, std::string_view name) {
  auto r = sim.find_raster(name);
  if (!r) fail(ErrorCode::UnknownName, "raster '" + std::string(name) + "'");
  return *r;
}

inline AgentId cell_id(const RasterMap& raster, std::span<const std::int64_t> index, bool wrap = false) {
  return raster.index_to_id[raster.linear(index, wrap)];
}
inline AgentId cell_id(const RasterMap& raster, std::initializer_list<std::int64_t> index, bool wrap = false) {
  return cell_id(raster, std::span<const std::int64_t>(index.begin(), index.size()), wrap);
}

/// Distinct neighbors of a cell (linear indices, ascending), self excluded.
inline std::vector<std::size_t> raster_neighbors(const RasterMap& raster, std::size_t cell, RasterTopology topology,
                                                 bool periodic) {
  const std::size_t nd = raster.dims.size();
  const auto base = raster.cartesian(cell);
  std::vector<std::size_t> out;
  std::vector<std::int64_t> offset(nd, -1);
  std::vector<std::int64_t> idx(nd);
  // Enumerate {-1,0,1}^nd.
  while (true) {
    int nonzero = 0;
    for (auto o : offset) nonzero += o != 0;
    const bool wanted = topology == RasterTopology::Moore ? nonzero > 0 : nonzero == 1;
    if (wanted) {
      bool inside = true;
      for (std::size_t d = 0; d < nd; ++d) {
        idx[d] = base[d] + offset[d];
        const auto extent = static_cast<std::int64_t>(raster.dims[d]);
        if (periodic) {
          idx[d] = ((idx[d] % extent) + extent) % extent;
        } else if (idx[d] < 0 || idx[d] >= extent) {
          inside = false;
        }
      }
      if (inside) {
        const std::size_t lin = raster.linear(idx);
        if (lin != cell) out.push_back(lin);
      }
    }
    std::size_t d = 0;
    while (d < nd && offset[d] == 1) offset[d++] = -1;
    if (d == nd) break;
    ++offset[d];
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// Adds one directed edge neighbor -> cell for every ordered pair of
/// distinct neighboring cells.
inline std::size_t connect_raster_neighbors(Simulation& sim, const RasterMap& raster, EdgeTypeTag edge_type,
                                            RasterTopology topology, bool periodic) {
  std::size_t added = 0;
  for (std::size_t cell = 0; cell < raster.size(); ++cell) {
    for (std::size_t nb : raster_neighbors(raster, cell, topology, periodic)) {
      sim.add_edge(edge_type, raster.index_to_id[cell], raster.index_to_id[nb]);
      ++added;
    }
  }
  return added;
}

/// Places an agent on a cell: adds the edge cell -> agent, and agent -> cell
/// as well when both_directions is set. Works on a Simulation during
/// initialization or on a TransitionContext inside a transition.
template <typename Target>
void move_to(Target& where, const RasterMap& raster, AgentId agent, std::span<const std::int64_t> index,
             EdgeTypeTag edge_type, bool both_directions = false) {
  const AgentId cell = cell_id(raster, index);
  where.add_edge(edge_type, agent, cell);
  if (both_directions) where.add_edge(edge_type, cell, agent);
}

template <typename Target>
void move_to(Target& where, const RasterMap& raster, AgentId agent, std::initializer_list<std::int64_t> index,
             EdgeTypeTag edge_type, bool both_directions = false) {
  move_to(where, raster, agent, std::span<const std::int64_t>(index.begin(), index.size()), edge_type,
          both_directions);
}

}  // namespace gdsim
