#pragma once

// Hegselmann-Krause bounded-confidence opinion dynamics on a Person graph.
// Each agent averages the opinions of all in-neighbors within epsilon of its
// own. Every topology carries a self-loop per agent so an agent always
// counts itself.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "gdsim/aggregate.hpp"
#include "gdsim/parallel.hpp"
#include "gdsim/simulation.hpp"

namespace gdsim::models {

enum class HkTopology { Complete, Regular, Clique };

inline std::string_view to_string(HkTopology t) {
  switch (t) {
    case HkTopology::Complete: return "complete";
    case HkTopology::Regular: return "regular";
    case HkTopology::Clique: return "clique";
  }
  return "?";
}

inline HkTopology parse_hk_topology(std::string_view s) {
  if (s == "complete") return HkTopology::Complete;
  if (s == "regular") return HkTopology::Regular;
  if (s == "clique") return HkTopology::Clique;
  fail(ErrorCode::InvalidArgument, "unknown topology '" + std::string(s) + "'");
}

struct HkConfig {
  std::size_t n = 1000;
  double epsilon = 0.2;
  HkTopology topology = HkTopology::Complete;
  std::size_t k = 10;            // regular: degree without the self-loop
  std::size_t cliques = 10;      // clique: number of cliques
  std::size_t clique_size = 10;  // clique: agents per clique (n = cliques * clique_size)
  std::uint64_t seed = 0;
  bool hints = true;
  CheckMode checks = CheckMode::On;
  std::vector<double> initial_opinions;  // overrides the uniform [0,1) draw when non-empty
};

struct HkModel {
  Simulation sim;
  AgentTypeTag person;
  EdgeTypeTag knows;
  std::size_t opinion = 0;
  TransitionSpec spec;
};

namespace detail {

// Arithmetic mean clamped to the range of its inputs. Rounding in the sum
// can otherwise push the mean of equal values one ulp outside their hull.
struct BoundedMean {
  double sum = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;

  void add(double x) {
    lo = count == 0 ? x : std::min(lo, x);
    hi = count == 0 ? x : std::max(hi, x);
    sum += x;
    ++count;
  }
  double value_or(double fallback) const {
    if (count == 0) return fallback;
    return std::clamp(sum / static_cast<double>(count), lo, hi);
  }
};

}  // namespace detail

/// Mean of the opinions within epsilon of `own`. `opinions` must contain
/// the agent's own opinion (the self-loop).
template <typename Range>
double hk_update(double own, const Range& opinions, double epsilon) {
  detail::BoundedMean acc;
  for (double x : opinions) {
    if (std::abs(x - own) <= epsilon) acc.add(x);
  }
  return acc.value_or(own);
}

/// New opinion of the agent behind `view`, read from its in-neighbors.
inline double hk_step(const NeighborhoodView& view, EdgeTypeTag knows, double epsilon) {
  const double own = view.state().f64(0);
  detail::BoundedMean acc;
  for (EdgeRecord e : view.edges_to(knows)) {
    const double x = view.source_state(e).f64(0);
    if (std::abs(x - own) <= epsilon) acc.add(x);
  }
  return acc.value_or(own);
}

inline auto hk_transition(EdgeTypeTag knows) {
  return [knows](TransitionContext& ctx) {
    const double eps = ctx.params().get("epsilon");
    ctx.keep_self({hk_step(ctx, knows, eps)});
  };
}

inline Schema hk_schema(bool hints) {
  Schema schema;
  schema.register_agent_type({"Person", {{"opinion", ScalarKind::Float64}}, hints});
  EdgeTypeDecl knows{"Knows", {}, {}, std::nullopt};
  if (hints) {
    knows.hints = HintSet{EdgeHint::Stateless, EdgeHint::SingleType};
    knows.single_type_target = "Person";
  }
  schema.register_edge_type(knows);
  return schema;
}

/// In-neighbors (self included) of every agent, sorted ascending.
inline std::vector<std::vector<std::size_t>> hk_in_neighbors(const HkConfig& cfg) {
  std::vector<std::vector<std::size_t>> in;
  switch (cfg.topology) {
    case HkTopology::Complete: {
      in.assign(cfg.n, {});
      for (std::size_t t = 0; t < cfg.n; ++t) {
        in[t].resize(cfg.n);
        for (std::size_t s = 0; s < cfg.n; ++s) in[t][s] = s;
      }
      break;
    }
    case HkTopology::Regular: {
      const std::size_t n = cfg.n;
      if (cfg.k >= n) fail(ErrorCode::InvalidArgument, "regular topology needs k < n");
      if (cfg.k % 2 == 1 && n % 2 == 1) fail(ErrorCode::InvalidArgument, "odd k needs an even n");
      // Circulant graph on a random ring order: k/2 ring neighbors on each
      // side, plus the opposite agent when k is odd.
      std::vector<std::size_t> ring(n);
      for (std::size_t i = 0; i < n; ++i) ring[i] = i;
      Rng rng(splitmix64(cfg.seed ^ 0x52e6a1b2c3d4e5f6ull));
      for (std::size_t i = n; i > 1; --i) std::swap(ring[i - 1], ring[rng.below(i)]);
      in.assign(n, {});
      const std::size_t half = cfg.k / 2;
      for (std::size_t p = 0; p < n; ++p) {
        auto& list = in[ring[p]];
        list.push_back(ring[p]);
        for (std::size_t d = 1; d <= half; ++d) {
          list.push_back(ring[(p + d) % n]);
          list.push_back(ring[(p + n - d) % n]);
        }
        if (cfg.k % 2 == 1) list.push_back(ring[(p + n / 2) % n]);
        std::sort(list.begin(), list.end());
      }
      break;
    }
    case HkTopology::Clique: {
      const std::size_t c = cfg.cliques, s = cfg.clique_size;
      if (c == 0 || s == 0) fail(ErrorCode::InvalidArgument, "clique topology needs cliques, clique_size >= 1");
      in.assign(c * s, {});
      for (std::size_t q = 0; q < c; ++q) {
        for (std::size_t a = 0; a < s; ++a) {
          auto& list = in[q * s + a];
          for (std::size_t b = 0; b < s; ++b) list.push_back(q * s + b);
        }
        // The first agent of each clique links to the first agents of the
        // neighboring cliques (a ring when there are at least 3).
        if (c >= 2) {
          in[q * s].push_back(((q + 1) % c) * s);
          if (c >= 3) in[q * s].push_back(((q + c - 1) % c) * s);
        }
      }
      for (auto& list : in) {
        std::sort(list.begin(), list.end());
        list.erase(std::unique(list.begin(), list.end()), list.end());
      }
      break;
    }
  }
  return in;
}

inline HkModel make_hk(const HkConfig& cfg) {
  if (!(cfg.epsilon > 0.0)) fail(ErrorCode::InvalidArgument, "epsilon must be > 0");
  const auto in = hk_in_neighbors(cfg);
  const std::size_t n = in.size();
  if (!cfg.initial_opinions.empty() && cfg.initial_opinions.size() != n) {
    fail(ErrorCode::InvalidArgument, "initial_opinions must have one value per agent");
  }
  HkModel m{Simulation(hk_schema(cfg.hints), cfg.seed), {}, {}, 0, {}};
  m.person = m.sim.schema().agent_tag("Person");
  m.knows = m.sim.schema().edge_tag("Knows");
  m.sim.checks().mode = cfg.checks;
  m.sim.set_param("epsilon", cfg.epsilon);
  Rng rng(cfg.seed);
  std::vector<AgentId> ids(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = cfg.initial_opinions.empty() ? rng.uniform01() : cfg.initial_opinions[i];
    ids[i] = m.sim.add_agent(m.person, {x});
  }
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t s : in[t]) m.sim.add_edge(m.knows, ids[t], ids[s]);
  }
  m.sim.finish_init();
  m.spec = TransitionSpec{"hk", {"Person"}, {"Person", "Knows"}, {"Person"}, {}};
  return m;
}

inline std::vector<double> hk_opinions(const Simulation& sim, AgentTypeTag person) {
  std::vector<double> out;
  out.reserve(sim.num_slots(person));
  for (AgentId id : sim.agents(person)) out.push_back(sim.agent_state(id).f64(0));
  return out;
}

/// Number of groups after sorting, splitting wherever neighbors differ by
/// more than `gap`.
inline std::size_t count_clusters(std::vector<double> opinions, double gap = 1e-9) {
  if (opinions.empty()) return 0;
  std::sort(opinions.begin(), opinions.end());
  std::size_t clusters = 1;
  for (std::size_t i = 1; i < opinions.size(); ++i) clusters += opinions[i] - opinions[i - 1] > gap ? 1 : 0;
  return clusters;
}

struct HkMetrics {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  std::size_t clusters = 0;
};

inline HkMetrics hk_metrics(const Simulation& sim, AgentTypeTag person) {
  auto opinion = [](const StateView& s) { return s.f64(0); };
  HkMetrics m;
  m.min = aggregate(sim, person, opinion, Reduce::Min);
  m.max = aggregate(sim, person, opinion, Reduce::Max);
  m.mean = aggregate(sim, person, opinion, Reduce::Sum) / aggregate_count(sim, person);
  m.clusters = count_clusters(hk_opinions(sim, person));
  return m;
}

/// One synchronous step on the installed partition.
inline void hk_advance(HkModel& m, const ExecutionOptions& options = {}) {
  m.sim.apply_transition(hk_transition(m.knows), m.spec, options);
  m.sim.finalize_step();
}

struct HkRunResult {
  std::vector<std::vector<double>> trajectory;  // index 0 is the initial state
  std::vector<HkMetrics> metrics;               // one per step
  std::vector<double> wall_ms;                  // transition time per step
  std::uint64_t checksum = 0;
};

inline HkRunResult hk_run(const HkConfig& cfg, std::int64_t steps, std::uint32_t workers = 1,
                          PartitionStrategy strategy = PartitionStrategy::ContiguousBlock,
                          bool record_trajectory = true) {
  if (steps < 1) fail(ErrorCode::InvalidArgument, "steps must be >= 1");
  HkModel m = make_hk(cfg);
  if (workers > 1) m.sim.set_partition(partition_graph(m.sim, workers, strategy));
  HkRunResult r;
  if (record_trajectory) r.trajectory.push_back(hk_opinions(m.sim, m.person));
  for (std::int64_t s = 0; s < steps; ++s) {
    hk_advance(m);
    r.wall_ms.push_back(m.sim.step_metrics().back().wall_ms);
    r.metrics.push_back(hk_metrics(m.sim, m.person));
    if (record_trajectory) r.trajectory.push_back(hk_opinions(m.sim, m.person));
  }
  r.checksum = m.sim.checksum();
  return r;
}

}  // namespace gdsim::models
