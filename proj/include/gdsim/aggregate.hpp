#pragma once

#include <algorithm>
#include <limits>

#include "gdsim/simulation.hpp"

namespace gdsim {

namespace detail {

struct Reducer {
  explicit Reducer(Reduce op) : op(op) {
    if (op == Reduce::Min || op == Reduce::Max) acc = std::numeric_limits<double>::quiet_NaN();
  }
  void add(double v) {
    ++n;
    switch (op) {
      case Reduce::Sum: acc += v; break;
      case Reduce::Min: acc = n == 1 ? v : std::min(acc, v); break;
      case Reduce::Max: acc = n == 1 ? v : std::max(acc, v); break;
      case Reduce::Count: acc += 1.0; break;
    }
  }
  Reduce op;
  double acc = 0.0;
  std::size_t n = 0;
};

}  // namespace detail

/// Reduction over all alive agents of a type in ascending slot order, so
/// the floating-point result never depends on the worker count. Min/Max of
/// an empty set is NaN.
template <typename Map>
double aggregate(const Simulation& sim, AgentTypeTag type, Map&& map, Reduce op) {
  detail::Reducer r(op);
  const std::size_t slots = sim.num_slots(type);
  for (std::size_t i = 0; i < slots; ++i) {
    const AgentId id = sim.id_of(type, i);
    if (!sim.alive(id)) continue;
    r.add(op == Reduce::Count ? 1.0 : static_cast<double>(map(sim.agent_state(id))));
  }
  return r.acc;
}

inline double aggregate_count(const Simulation& sim, AgentTypeTag type) {
  return static_cast<double>(sim.num_alive(type));
}

/// Reduction over all edges of a type: targets in ascending slot order, then
/// insertion order. Count works for every representation; the other
/// reductions need stored records.
template <typename Map>
double aggregate_edges(const Simulation& sim, EdgeTypeTag type, Map&& map, Reduce op) {
  const auto& info = sim.schema().edge(type);
  if (op == Reduce::Count && !info.has_records()) return static_cast<double>(sim.num_edges(type));
  if (!info.has_records()) {
    fail(ErrorCode::HintViolation, "edge type '" + info.name + "' stores no records to map over");
  }
  detail::Reducer r(op);
  sim.for_each_edge(type, [&](AgentId, const EdgeRecord& rec) {
    r.add(op == Reduce::Count ? 1.0 : static_cast<double>(map(rec)));
  });
  return r.acc;
}

}  // namespace gdsim
