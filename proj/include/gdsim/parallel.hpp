#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <queue>
#include <utility>
#include <vector>

#include "gdsim/partition.hpp"
#include "gdsim/simulation.hpp"

namespace gdsim {

/// All alive agents in canonical order (type tag, then slot).
inline std::vector<AgentId> canonical_agents(const Simulation& sim) {
  std::vector<AgentId> out;
  for (std::size_t t = 0; t < sim.schema().num_agent_types(); ++t) {
    auto ids = sim.agents(AgentTypeTag{static_cast<std::uint8_t>(t)});
    out.insert(out.end(), ids.begin(), ids.end());
  }
  return out;
}

/// Calls f(source, target) for every edge whose source is stored.
template <typename F>
void for_each_sourced_edge(const Simulation& sim, F&& f) {
  for (const auto& info : sim.schema().edge_types()) {
    if (!info.stores_source() || !info.has_records()) continue;
    sim.for_each_edge(info.tag, [&](AgentId target, const EdgeRecord& r) { f(r.source(), target); });
  }
}

namespace detail {

inline std::vector<std::size_t> block_sizes(std::size_t n, std::uint32_t workers) {
  std::vector<std::size_t> sizes(workers, n / workers);
  for (std::size_t i = 0; i < n % workers; ++i) ++sizes[i];
  return sizes;
}

// Position of every agent in canonical order, indexed [type][slot].
struct CanonicalIndex {
  explicit CanonicalIndex(const Simulation& sim, const std::vector<AgentId>& ids)
      : pos(sim.schema().num_agent_types()) {
    for (std::size_t t = 0; t < pos.size(); ++t) {
      pos[t].assign(sim.num_slots(AgentTypeTag{static_cast<std::uint8_t>(t)}), kNone);
    }
    for (std::size_t i = 0; i < ids.size(); ++i) pos[ids[i].type_tag()][ids[i].local_index()] = i;
  }
  std::size_t of(AgentId id) const {
    const auto& v = pos[id.type_tag()];
    return id.local_index() < v.size() ? v[id.local_index()] : kNone;
  }
  static constexpr std::size_t kNone = ~std::size_t{0};
  std::vector<std::vector<std::size_t>> pos;
};

// Grows one block at a time from the highest-degree unassigned vertex,
// always absorbing the frontier vertex with the most edge weight into the
// current block (ties: lowest canonical position).
inline std::vector<std::uint32_t> greedy_blocks(const Simulation& sim, const std::vector<AgentId>& ids,
                                                std::uint32_t workers) {
  const std::size_t n = ids.size();
  const CanonicalIndex index(sim, ids);

  std::vector<std::pair<std::size_t, std::size_t>> links;
  for_each_sourced_edge(sim, [&](AgentId s, AgentId t) {
    const std::size_t a = index.of(s), b = index.of(t);
    if (a == CanonicalIndex::kNone || b == CanonicalIndex::kNone || a == b) return;
    links.emplace_back(a, b);
    links.emplace_back(b, a);
  });
  std::sort(links.begin(), links.end());
  // CSR with edge multiplicities as weights.
  std::vector<std::size_t> offsets(n + 1, 0);
  std::vector<std::size_t> nbr;
  std::vector<std::uint32_t> weight;
  std::vector<std::uint64_t> degree(n, 0);
  for (std::size_t i = 0; i < links.size();) {
    std::size_t j = i;
    while (j < links.size() && links[j] == links[i]) ++j;
    nbr.push_back(links[i].second);
    weight.push_back(static_cast<std::uint32_t>(j - i));
    ++offsets[links[i].first + 1];
    degree[links[i].first] += j - i;
    i = j;
  }
  for (std::size_t v = 0; v < n; ++v) offsets[v + 1] += offsets[v];

  std::vector<std::size_t> seeds(n);
  for (std::size_t v = 0; v < n; ++v) seeds[v] = v;
  std::stable_sort(seeds.begin(), seeds.end(),
                   [&](std::size_t a, std::size_t b) { return degree[a] > degree[b]; });
  std::size_t next_seed = 0;

  constexpr std::uint32_t kUnassigned = ~std::uint32_t{0};
  std::vector<std::uint32_t> part(n, kUnassigned);
  std::vector<std::uint64_t> gain(n, 0);
  std::vector<std::uint32_t> gain_block(n, kUnassigned);
  using Entry = std::pair<std::uint64_t, std::size_t>;  // (gain, position)
  auto worse = [](const Entry& a, const Entry& b) {
    return a.first != b.first ? a.first < b.first : a.second > b.second;
  };

  const auto caps = block_sizes(n, workers);
  for (std::uint32_t b = 0; b < workers; ++b) {
    std::priority_queue<Entry, std::vector<Entry>, decltype(worse)> frontier(worse);
    std::size_t filled = 0;
    while (filled < caps[b]) {
      std::size_t v = CanonicalIndex::kNone;
      while (!frontier.empty()) {
        const auto [g, cand] = frontier.top();
        frontier.pop();
        if (part[cand] == kUnassigned && gain_block[cand] == b && gain[cand] == g) {
          v = cand;
          break;
        }
      }
      if (v == CanonicalIndex::kNone) {
        while (part[seeds[next_seed]] != kUnassigned) ++next_seed;
        v = seeds[next_seed];
      }
      part[v] = b;
      ++filled;
      for (std::size_t k = offsets[v]; k < offsets[v + 1]; ++k) {
        const std::size_t u = nbr[k];
        if (part[u] != kUnassigned) continue;
        if (gain_block[u] != b) {
          gain_block[u] = b;
          gain[u] = 0;
        }
        gain[u] += weight[k];
        frontier.emplace(gain[u], u);
      }
    }
  }
  return part;
}

}  // namespace detail

/// Assigns every alive agent to one of `workers` workers.
inline Partition partition_graph(const Simulation& sim, std::uint32_t workers, PartitionStrategy strategy) {
  if (workers < 1) fail(ErrorCode::InvalidArgument, "worker count must be >= 1");
  Partition p(workers, strategy, sim.schema().num_agent_types());
  const auto ids = canonical_agents(sim);
  switch (strategy) {
    case PartitionStrategy::ContiguousBlock: {
      const auto sizes = detail::block_sizes(ids.size(), workers);
      std::size_t i = 0;
      for (std::uint32_t w = 0; w < workers; ++w) {
        for (std::size_t k = 0; k < sizes[w]; ++k) p.assign(ids[i++], w);
      }
      break;
    }
    case PartitionStrategy::RoundRobin:
      for (std::size_t i = 0; i < ids.size(); ++i) p.assign(ids[i], static_cast<std::uint32_t>(i % workers));
      break;
    case PartitionStrategy::GreedyEdgeCut: {
      const auto part = detail::greedy_blocks(sim, ids, workers);
      for (std::size_t i = 0; i < ids.size(); ++i) p.assign(ids[i], part[i]);
      break;
    }
  }
  return p;
}

/// Number of alive agents per worker.
inline std::vector<std::size_t> partition_sizes(const Simulation& sim, const Partition& p) {
  std::vector<std::size_t> sizes(p.workers(), 0);
  for (AgentId id : canonical_agents(sim)) ++sizes[p.owner(id)];
  return sizes;
}

/// Directed edges (stored-source types only) whose endpoints are owned by
/// different workers.
inline std::size_t cut_edges(const Simulation& sim, const Partition& p) {
  std::size_t cut = 0;
  for_each_sourced_edge(sim, [&](AgentId s, AgentId t) { cut += p.owner(s) != p.owner(t) ? 1 : 0; });
  return cut;
}

inline double cut_fraction(const Simulation& sim, const Partition& p) {
  std::size_t cut = 0, total = 0;
  for_each_sourced_edge(sim, [&](AgentId s, AgentId t) {
    ++total;
    cut += p.owner(s) != p.owner(t) ? 1 : 0;
  });
  return total == 0 ? 0.0 : static_cast<double>(cut) / static_cast<double>(total);
}

/// Distinct undirected agent pairs that connect each pair of workers.
inline std::map<std::pair<std::uint32_t, std::uint32_t>, std::size_t> boundary_links(const Simulation& sim,
                                                                                  const Partition& p) {
  std::vector<std::pair<std::uint64_t, std::uint64_t>> pairs;
  for_each_sourced_edge(sim, [&](AgentId s, AgentId t) {
    if (p.owner(s) == p.owner(t)) return;
    auto a = s.canonical_key(), b = t.canonical_key();
    pairs.emplace_back(std::min(a, b), std::max(a, b));
  });
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::size_t> out;
  auto from_key = [](std::uint64_t key) {
    return AgentId::encode(static_cast<std::uint8_t>(key >> AgentId::kIndexBits), 0, key & AgentId::kIndexMask);
  };
  for (auto [a, b] : pairs) {
    const auto wa = p.owner(from_key(a)), wb = p.owner(from_key(b));
    ++out[{std::min(wa, wb), std::max(wa, wb)}];
  }
  return out;
}

/// Runs one transition on `workers` workers. Reuses the installed partition
/// when it has that many workers, otherwise installs a contiguous one.
template <typename Fn>
void parallel_apply(Simulation& sim, Fn&& fn, const TransitionSpec& spec, std::uint32_t workers,
                    const ExecutionOptions& options = {}) {
  if (sim.partition().workers() != workers) {
    sim.set_partition(partition_graph(sim, workers, PartitionStrategy::ContiguousBlock));
  }
  sim.apply_transition(std::forward<Fn>(fn), spec, options);
}

}  // namespace gdsim
