#pragma once

// add_edge throughput per edge storage plan.

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include "gdsim/simulation.hpp"

namespace gdsim {

struct MicrobenchConfig {
  std::size_t targets = 1'000'000;
  std::size_t warmup_calls = 1'000'000;
  std::size_t timed_calls = 10'000'000;
  std::uint64_t seed = 0;
};

struct MicrobenchResult {
  EdgeRepresentation plan;
  double ns_per_add = 0.0;
  std::size_t calls = 0;
};

namespace detail {

inline HintSet hints_for(EdgeRepresentation plan) {
  switch (plan) {
    case EdgeRepresentation::FullEdgeList: return {};
    case EdgeRepresentation::SourceOnlyList: return {EdgeHint::Stateless};
    case EdgeRepresentation::StateOnlyList: return {EdgeHint::IgnoreFrom};
    case EdgeRepresentation::CountOnly: return {EdgeHint::Stateless, EdgeHint::IgnoreFrom};
    case EdgeRepresentation::ExistenceBit: return {EdgeHint::Stateless, EdgeHint::IgnoreFrom, EdgeHint::SingleEdge};
    case EdgeRepresentation::SingleFullEdge: return {EdgeHint::SingleEdge};
  }
  return {};
}

}  // namespace detail

/// Times cfg.timed_calls add_edge calls on a fresh graph of cfg.targets
/// agents, after cfg.warmup_calls untimed ones. Targets cycle through a
/// precomputed random sequence; checks are off.
inline MicrobenchResult microbench_add_edge(EdgeRepresentation plan, const MicrobenchConfig& cfg = {}) {
  Schema schema;
  const auto node = schema.register_agent_type({"Node", {}, false});
  const auto link = schema.register_edge_type({"Link", {}, detail::hints_for(plan), std::nullopt});
  Simulation sim(std::move(schema), cfg.seed);
  sim.checks().mode = CheckMode::Off;
  std::vector<AgentId> ids(cfg.targets);
  for (auto& id : ids) id = sim.add_agent(node, {});

  constexpr std::size_t kSequence = std::size_t{1} << 20;
  std::vector<AgentId> sequence(kSequence);
  Rng rng(cfg.seed);
  for (auto& t : sequence) t = ids[rng.below(ids.size())];
  const AgentId source = ids.front();

  for (std::size_t i = 0; i < cfg.warmup_calls; ++i) sim.add_edge(link, sequence[i & (kSequence - 1)], source);
  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < cfg.timed_calls; ++i) {
    sim.add_edge(link, sequence[(i + cfg.warmup_calls) & (kSequence - 1)], source);
  }
  const auto t1 = std::chrono::steady_clock::now();
  const double ns = std::chrono::duration<double, std::nano>(t1 - t0).count();
  return {plan, cfg.timed_calls == 0 ? 0.0 : ns / static_cast<double>(cfg.timed_calls), cfg.timed_calls};
}

inline std::vector<EdgeRepresentation> all_edge_plans() {
  return {EdgeRepresentation::FullEdgeList, EdgeRepresentation::SourceOnlyList, EdgeRepresentation::StateOnlyList,
          EdgeRepresentation::CountOnly,    EdgeRepresentation::ExistenceBit,   EdgeRepresentation::SingleFullEdge};
}

}  // namespace gdsim
