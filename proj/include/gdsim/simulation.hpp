#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <exception>
#include <functional>
#include <initializer_list>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "gdsim/checks.hpp"
#include "gdsim/edge_store.hpp"
#include "gdsim/errors.hpp"
#include "gdsim/globals.hpp"
#include "gdsim/ids.hpp"
#include "gdsim/partition.hpp"
#include "gdsim/rng.hpp"
#include "gdsim/schema.hpp"
#include "gdsim/transition.hpp"
#include "gdsim/value.hpp"

namespace gdsim {

class Simulation;
class TransitionContext;
struct RasterMap;

using TransitionFn = std::function<void(TransitionContext&)>;

struct StepMetrics {
  std::int64_t step = 0;
  double wall_ms = 0.0;  // transition time only, initialization excluded
};

struct TransitionStats {
  std::size_t ghost_copies = 0;
  std::size_t local_source_reads = 0;
  std::size_t remote_source_reads = 0;
  std::size_t new_agents = 0;
  std::size_t new_edges = 0;
};

namespace detail {

struct AgentBuffer {
  std::vector<Value> states;
  std::vector<std::uint8_t> alive;
  std::vector<std::uint32_t> home;

  std::size_t slots() const { return alive.size(); }
};

struct AgentStore {
  AgentBuffer read;
  std::vector<std::uint64_t> free_slots;
};

struct TransitionPlan {
  std::string name;
  std::vector<std::uint8_t> call_agent, read_agent, write_agent, keep_agent;
  std::vector<std::uint8_t> read_edge, write_edge, keep_edge;
  std::uint64_t signature = 0;
};

struct NewAgentRecord {
  AgentTypeTag type;
  std::size_t state_offset = 0;
};

struct EmittedEdge {
  EdgeTypeTag type;
  AgentId target;
  AgentId source;
  std::size_t state_offset = 0;
};

struct Segment {
  std::uint64_t key = 0;
  AgentId producer;
  std::uint32_t worker = 0;
  std::size_t agents_begin = 0, agents_end = 0;
  std::size_t edges_begin = 0, edges_end = 0;
};

// Worker-local read-only copies of remote agents' time-t states.
struct GhostTable {
  std::vector<std::vector<Value>> states;
  std::vector<std::vector<std::uint8_t>> present;
  std::vector<AgentId> needed;
  std::uint64_t cache_key = ~std::uint64_t{0};
};

struct WorkerState {
  std::uint32_t index = 0;
  std::vector<AgentId> agents;
  std::vector<Value> values;
  std::vector<NewAgentRecord> new_agents;
  std::vector<AgentId> final_ids;
  std::vector<EmittedEdge> edges;
  std::vector<Segment> segments;
  std::vector<ContractReport> reports;
  std::exception_ptr error;
  std::uint64_t error_key = 0;
  GhostTable ghost;
  std::size_t ghost_copies = 0;
  std::size_t local_reads = 0;
  std::size_t remote_reads = 0;

  void reset() {
    agents.clear();
    values.clear();
    new_agents.clear();
    final_ids.clear();
    edges.clear();
    segments.clear();
    reports.clear();
    error = nullptr;
    error_key = 0;
    ghost_copies = local_reads = remote_reads = 0;
  }
};

struct PendingTransition {
  TransitionPlan plan;
  std::vector<std::optional<AgentBuffer>> agent_write;
  std::vector<std::vector<std::uint64_t>> free_slots;
  std::vector<std::optional<EdgeStore>> edge_write;
  std::vector<std::uint8_t> edge_moved;
  bool births = false;
  bool edges_written = false;
};

inline std::uint64_t fnv1a(std::uint64_t h, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xff;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace detail

/// Read-only 1-neighborhood of the agent whose transition function is
/// running: its own time-t state, its incoming edges of readable types, and
/// the time-t states of those edges' sources.
class NeighborhoodView {
 public:
  AgentId self() const { return self_; }
  StateView state() const;

  EdgeRange edges_to(EdgeTypeTag type) const;
  std::size_t num_edges_to(EdgeTypeTag type) const;
  bool has_edge(EdgeTypeTag type) const;
  StateView source_state(const EdgeRecord& edge) const;

  const Parameters& params() const;
  const Globals& globals() const;
  std::int64_t step() const;

 protected:
  NeighborhoodView(const Simulation& sim, detail::WorkerState& worker)
      : sim_(&sim), worker_(&worker) {}

  const EdgeTypeInfo& readable_edge(EdgeTypeTag type) const;

  const Simulation* sim_;
  detail::WorkerState* worker_;
  AgentId self_;
};

/// Handed to transition functions. Adds the effects that build the agent's
/// contribution to the next graph on top of the read-only view.
class TransitionContext : public NeighborhoodView {
 public:
  Rng& rng() { return rng_; }

  /// Keeps the agent in the next graph with its current state.
  void keep_self();
  /// Keeps the agent with a new state.
  void keep_self(std::span<const Value> state);
  void keep_self(std::initializer_list<Value> state) {
    keep_self(std::span<const Value>(state.begin(), state.size()));
  }
  /// Keeps the agent and returns its next state for in-place edits.
  StateSpan write_self();
  void kill_self();

  AgentId add_agent(AgentTypeTag type, std::span<const Value> state);
  AgentId add_agent(AgentTypeTag type, std::initializer_list<Value> state) {
    return add_agent(type, std::span<const Value>(state.begin(), state.size()));
  }
  void add_edge(EdgeTypeTag type, AgentId target, AgentId source, std::span<const Value> state = {});
  void add_edge(EdgeTypeTag type, AgentId target, AgentId source, std::initializer_list<Value> state) {
    add_edge(type, target, source, std::span<const Value>(state.begin(), state.size()));
  }

 private:
  friend class Simulation;
  TransitionContext(Simulation& sim, detail::WorkerState& worker);

  void begin(AgentId self);
  void end();
  std::size_t own_slot_check_writable() const;

  Simulation* msim_;
  Rng rng_;
  std::size_t agents_begin_ = 0;
  std::size_t edges_begin_ = 0;
};

class Simulation {
 public:
  explicit Simulation(Schema schema, std::uint64_t seed = 0)
      : schema_(std::make_shared<const Schema>(std::move(schema))), seed_(seed) {
    agents_.resize(schema_->num_agent_types());
    edges_.reserve(schema_->num_edge_types());
    for (const auto& e : schema_->edge_types()) {
      edges_.emplace_back(&e, schema_->num_agent_types());
    }
    partition_ = Partition(1, PartitionStrategy::ContiguousBlock, schema_->num_agent_types());
  }

  const Schema& schema() const { return *schema_; }
  std::uint64_t seed() const { return seed_; }
  std::int64_t step() const { return step_; }
  bool initializing() const { return phase_ == Phase::Init; }
  bool started() const { return started_; }
  bool transition_pending() const { return phase_ == Phase::Pending; }

  /// Ends the initialization phase. Called implicitly by the first transition.
  void finish_init() {
    if (phase_ == Phase::Init) phase_ = Phase::Idle;
  }

  // ---- graph construction (initialization) --------------------------------

  AgentId add_agent(AgentTypeTag type, std::span<const Value> state) {
    require_init("add_agent");
    const auto& info = schema_->agent(type);
    auto& buf = agents_[type.value].read;
    if (buf.slots() >= AgentId::kMaxSlots) fail(ErrorCode::IndexOverflow, "agent type '" + info.name + "' is full");
    const std::size_t slot = buf.slots();
    append_slot(buf, info, state, 0);
    return AgentId::encode(type, 0, slot);
  }
  AgentId add_agent(AgentTypeTag type, std::initializer_list<Value> state) {
    return add_agent(type, std::span<const Value>(state.begin(), state.size()));
  }

  void add_edge(EdgeTypeTag type, AgentId target, AgentId source, std::span<const Value> state = {}) {
    require_init("add_edge");
    const auto& info = schema_->edge(type);
    if (!alive(target)) fail(ErrorCode::InvalidArgument, "edge target " + to_string(target) + " does not exist");
    if (info.stores_source() && !alive(source)) {
      fail(ErrorCode::InvalidArgument, "edge source " + to_string(source) + " does not exist");
    }
    const auto values = normalized_edge_state(info, state);
    if (checks_.single_type_active()) {
      if (auto r = check_single_type(info, target, step_)) report(std::move(*r));
    }
    auto& store = edges_[type.value];
    if (checks_.single_edge_active() && info.single_edge()) {
      if (auto r = check_single_edge(info, target, store.has(target), step_)) report(std::move(*r));
    }
    store.add(target, source, values);
  }
  void add_edge(EdgeTypeTag type, AgentId target, AgentId source, std::initializer_list<Value> state) {
    add_edge(type, target, source, std::span<const Value>(state.begin(), state.size()));
  }

  // ---- inspection of the current graph (read side) ------------------------

  std::size_t num_slots(AgentTypeTag type) const { return agents_.at(type.value).read.slots(); }

  std::size_t num_alive(AgentTypeTag type) const {
    const auto& a = agents_.at(type.value).read.alive;
    return static_cast<std::size_t>(std::count(a.begin(), a.end(), std::uint8_t{1}));
  }

  bool alive(AgentId id) const {
    if (id.type_tag() >= agents_.size() || id.provisional()) return false;
    const auto& buf = agents_[id.type_tag()].read;
    return id.local_index() < buf.slots() && buf.alive[id.local_index()] != 0;
  }

  /// Id of a slot, with the partition field of the worker that created it.
  AgentId id_of(AgentTypeTag type, std::size_t slot) const {
    const auto& buf = agents_.at(type.value).read;
    if (slot >= buf.slots()) fail(ErrorCode::IndexOutOfBounds, "slot " + std::to_string(slot));
    return AgentId::encode(type, buf.home[slot], slot);
  }

  std::vector<AgentId> agents(AgentTypeTag type) const {
    std::vector<AgentId> out;
    const auto& buf = agents_.at(type.value).read;
    for (std::size_t i = 0; i < buf.slots(); ++i) {
      if (buf.alive[i]) out.push_back(AgentId::encode(type, buf.home[i], i));
    }
    return out;
  }

  StateView agent_state(AgentId id) const {
    if (!alive(id)) fail(ErrorCode::InvalidArgument, to_string(id) + " is not alive");
    return read_state(id);
  }

  EdgeRange edges_to(EdgeTypeTag type, AgentId target) const { return edges_.at(type.value).records(target); }
  std::size_t num_edges_to(EdgeTypeTag type, AgentId target) const {
    return edges_.at(type.value).count(target);
  }
  bool has_edge(EdgeTypeTag type, AgentId target) const { return edges_.at(type.value).has(target); }
  std::size_t num_edges(EdgeTypeTag type) const { return edges_.at(type.value).total_edges(); }
  const EdgeStore& edge_store(EdgeTypeTag type) const { return edges_.at(type.value); }

  /// Visits every stored edge with records, targets in ascending slot order.
  template <typename F>
  void for_each_edge(EdgeTypeTag type, F&& f) const {
    const auto& store = edges_.at(type.value);
    for (std::size_t c = 0; c < store.num_columns(); ++c) {
      const std::size_t size = std::min(store.column_size(c), agents_[c].read.slots());
      for (std::size_t i = 0; i < size; ++i) {
        if (!agents_[c].read.alive[i]) continue;
        const AgentId target = AgentId::encode(static_cast<std::uint8_t>(c), agents_[c].read.home[i], i);
        for (EdgeRecord r : store.records(target)) f(target, r);
      }
    }
  }

  /// Hash of the read-side graph that ignores partition fields, so equal
  /// graphs give equal checksums regardless of the worker count.
  std::uint64_t checksum() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t t = 0; t < agents_.size(); ++t) {
      const auto& buf = agents_[t].read;
      const std::size_t w = schema_->agent_types()[t].layout.width();
      h = detail::fnv1a(h, buf.slots());
      for (std::size_t i = 0; i < buf.slots(); ++i) {
        h = detail::fnv1a(h, buf.alive[i]);
        if (!buf.alive[i]) continue;
        for (std::size_t f = 0; f < w; ++f) h = detail::fnv1a(h, buf.states[i * w + f].raw());
      }
    }
    for (const auto& store : edges_) {
      const auto& info = store.type();
      for (std::size_t c = 0; c < store.num_columns(); ++c) {
        const std::size_t size = store.column_size(c);
        for (std::size_t i = 0; i < size; ++i) {
          const AgentId target = AgentId::encode(static_cast<std::uint8_t>(c), 0, i);
          const std::size_t n = store.count(target);
          if (n == 0) continue;
          h = detail::fnv1a(h, (std::uint64_t{info.tag.value} << 56) ^ (c << 48) ^ i);
          h = detail::fnv1a(h, n);
          if (!info.has_records()) continue;
          for (EdgeRecord r : store.records(target)) {
            if (info.stores_source()) h = detail::fnv1a(h, r.source().canonical_key());
            if (info.stores_state()) {
              for (Value v : r.state().values()) h = detail::fnv1a(h, v.raw());
            }
          }
        }
      }
    }
    return h;
  }

  // ---- transitions --------------------------------------------------------

  /// Runs fn once for every alive agent of the callable types against the
  /// time-t graph and stages the union of their outputs as the next graph.
  /// The staged graph becomes visible at finalize_step() (or when the next
  /// transition of the same step starts).
  template <typename Fn>
  void apply_transition(Fn&& fn, const TransitionSpec& spec, const ExecutionOptions& options = {});

  /// Commits the staged transition: drops dangling edges, swaps buffers and
  /// advances the step counter.
  void finalize_step() {
    if (phase_ == Phase::InTransition) fail(ErrorCode::InvalidState, "finalize_step inside a transition");
    if (phase_ == Phase::Init) finish_init();
    if (phase_ == Phase::Pending) commit_pending();
    ++step_;
    ordinal_ = 0;
    metrics_.push_back(StepMetrics{step_, step_wall_ms_});
    step_wall_ms_ = 0.0;
  }

  const std::vector<StepMetrics>& step_metrics() const { return metrics_; }
  const TransitionStats& last_stats() const { return stats_; }

  // ---- partitioning -------------------------------------------------------

  const Partition& partition() const { return partition_; }
  void set_partition(Partition p) {
    if (phase_ == Phase::InTransition) fail(ErrorCode::MidStepMutation, "repartition inside a transition");
    partition_ = std::move(p);
    ++partition_version_;
  }

  // ---- parameters and globals --------------------------------------------

  void set_param(std::string_view name, double value) {
    if (started_) fail(ErrorCode::ParamFrozen, "'" + std::string(name) + "' set after the simulation started");
    params_.put(name, value);
  }
  double get_param(std::string_view name) const { return params_.get(name); }
  const Parameters& params() const { return params_; }

  void set_global(std::string_view name, double value) {
    if (phase_ == Phase::InTransition) {
      fail(ErrorCode::MidStepMutation, "global '" + std::string(name) + "' set during a transition");
    }
    globals_.put(name, value);
  }
  double get_global(std::string_view name) const { return globals_.get(name); }
  const Globals& globals() const { return globals_; }

  // ---- rasters ------------------------------------------------------------

  void register_raster(const std::string& name, std::shared_ptr<const RasterMap> raster) {
    if (rasters_.count(name)) fail(ErrorCode::DuplicateRasterName, "'" + name + "'");
    rasters_.emplace(name, std::move(raster));
  }
  std::shared_ptr<const RasterMap> find_raster(std::string_view name) const {
    auto it = rasters_.find(name);
    return it == rasters_.end() ? nullptr : it->second;
  }

  // ---- checks -------------------------------------------------------------

  CheckConfig& checks() { return checks_; }
  const CheckConfig& checks() const { return checks_; }
  const std::vector<ContractReport>& contract_reports() const { return reports_; }
  void clear_contract_reports() { reports_.clear(); }

 private:
  friend class NeighborhoodView;
  friend class TransitionContext;

  enum class Phase { Init, Idle, InTransition, Pending };

  void require_init(const char* what) const {
    if (phase_ == Phase::InTransition) {
      fail(ErrorCode::InvalidState, std::string(what) + " on the simulation inside a transition; use the context");
    }
    if (phase_ != Phase::Init) {
      fail(ErrorCode::InvalidState, std::string(what) + " outside a transition is only allowed during initialization");
    }
  }

  void report(ContractReport r) {
    if (checks_.mode == CheckMode::On) throw ContractViolation(std::move(r));
    reports_.push_back(std::move(r));
  }

  static void append_slot(detail::AgentBuffer& buf, const AgentTypeInfo& info, std::span<const Value> state,
                          std::uint32_t home) {
    const std::size_t w = info.layout.width();
    if (!state.empty() && state.size() != w) {
      fail(ErrorCode::InvalidArgument, "agent type '" + info.name + "' expects " + std::to_string(w) +
                                           " state values, got " + std::to_string(state.size()));
    }
    if (state.empty()) {
      buf.states.resize(buf.states.size() + w);
    } else {
      buf.states.insert(buf.states.end(), state.begin(), state.end());
    }
    buf.alive.push_back(1);
    buf.home.push_back(home);
  }

  static std::span<const Value> normalized_edge_state(const EdgeTypeInfo& info, std::span<const Value> state) {
    const std::size_t w = info.layout.width();
    if (state.empty()) {
      static thread_local std::vector<Value> zeros;
      zeros.assign(w, Value{});
      return zeros;
    }
    if (state.size() != w) {
      fail(ErrorCode::InvalidArgument, "edge type '" + info.name + "' expects " + std::to_string(w) +
                                           " state values, got " + std::to_string(state.size()));
    }
    return state;
  }

  StateView read_state(AgentId id) const {
    const std::size_t w = schema_->agent_types()[id.type_tag()].layout.width();
    const auto& buf = agents_[id.type_tag()].read;
    return StateView(std::span<const Value>(buf.states.data() + id.local_index() * w, w));
  }

  bool alive_next(AgentId id) const {
    const auto t = id.type_tag();
    if (t >= agents_.size()) return false;
    const detail::AgentBuffer& buf =
        pending_->agent_write[t] ? *pending_->agent_write[t] : agents_[t].read;
    return id.local_index() < buf.slots() && buf.alive[id.local_index()] != 0;
  }

  detail::TransitionPlan resolve(const TransitionSpec& spec) const {
    detail::TransitionPlan plan;
    plan.name = spec.name;
    const std::size_t na = schema_->num_agent_types();
    const std::size_t ne = schema_->num_edge_types();
    plan.call_agent.assign(na, 0);
    plan.read_agent.assign(na, 0);
    plan.write_agent.assign(na, 0);
    plan.keep_agent.assign(na, 0);
    plan.read_edge.assign(ne, 0);
    plan.write_edge.assign(ne, 0);
    plan.keep_edge.assign(ne, 0);
    auto mark = [&](const std::string& name, std::vector<std::uint8_t>* agent_set,
                    std::vector<std::uint8_t>* edge_set) {
      const auto a = schema_->find_agent_type(name);
      const auto e = schema_->find_edge_type(name);
      if (a && e && agent_set && edge_set) {
        fail(ErrorCode::InvalidArgument, "'" + name + "' names both an agent and an edge type");
      }
      if (a && agent_set) {
        (*agent_set)[a->value] = 1;
      } else if (e && edge_set) {
        (*edge_set)[e->value] = 1;
      } else {
        fail(agent_set && !edge_set ? ErrorCode::UnknownAgentType : ErrorCode::UnknownName,
             "transition '" + spec.name + "' names unknown type '" + name + "'");
      }
    };
    for (const auto& n : spec.call) mark(n, &plan.call_agent, nullptr);
    for (const auto& n : spec.read) mark(n, &plan.read_agent, &plan.read_edge);
    for (const auto& n : spec.write) mark(n, &plan.write_agent, &plan.write_edge);
    for (const auto& n : spec.keep_existing) mark(n, &plan.keep_agent, &plan.keep_edge);
    for (std::size_t i = 0; i < na; ++i) {
      if (plan.keep_agent[i] && !plan.write_agent[i]) {
        fail(ErrorCode::InvalidArgument, "keep_existing type '" + schema_->agent_types()[i].name + "' is not written");
      }
    }
    for (std::size_t i = 0; i < ne; ++i) {
      if (plan.keep_edge[i] && !plan.write_edge[i]) {
        fail(ErrorCode::InvalidArgument, "keep_existing type '" + schema_->edge_types()[i].name + "' is not written");
      }
    }
    std::uint64_t sig = 0xcbf29ce484222325ull;
    for (auto v : plan.call_agent) sig = detail::fnv1a(sig, v);
    for (auto v : plan.read_agent) sig = detail::fnv1a(sig, v);
    for (auto v : plan.read_edge) sig = detail::fnv1a(sig, v);
    plan.signature = sig;
    return plan;
  }

  void begin_pending(detail::TransitionPlan plan) {
    auto p = std::make_unique<detail::PendingTransition>();
    const std::size_t na = schema_->num_agent_types();
    const std::size_t ne = schema_->num_edge_types();
    p->agent_write.resize(na);
    p->free_slots.resize(na);
    p->edge_write.resize(ne);
    p->edge_moved.assign(ne, 0);
    for (std::size_t t = 0; t < na; ++t) {
      if (!plan.write_agent[t]) continue;
      detail::AgentBuffer buf = agents_[t].read;
      if (!plan.keep_agent[t]) std::fill(buf.alive.begin(), buf.alive.end(), std::uint8_t{0});
      p->agent_write[t] = std::move(buf);
      p->free_slots[t] = agents_[t].free_slots;
    }
    for (std::size_t e = 0; e < ne; ++e) {
      if (!plan.write_edge[e]) continue;
      p->edges_written = true;
      if (!plan.keep_edge[e]) {
        p->edge_write[e].emplace(&schema_->edge_types()[e], na);
      } else if (plan.read_edge[e]) {
        p->edge_write[e] = edges_[e];
      } else {
        p->edge_write[e] = std::move(edges_[e]);
        edges_[e] = EdgeStore(&schema_->edge_types()[e], na);
        p->edge_moved[e] = 1;
      }
    }
    p->plan = std::move(plan);
    pending_ = std::move(p);
  }

  void discard_pending() {
    if (!pending_) return;
    for (std::size_t e = 0; e < pending_->edge_moved.size(); ++e) {
      if (pending_->edge_moved[e]) edges_[e] = std::move(*pending_->edge_write[e]);
    }
    pending_.reset();
    phase_ = Phase::Idle;
  }

  void prepare_workers(const ExecutionOptions& options) {
    const std::uint32_t w = partition_.workers();
    workers_.resize(w);
    for (std::uint32_t i = 0; i < w; ++i) {
      workers_[i].reset();
      workers_[i].index = i;
    }
    const auto& plan = pending_->plan;
    for (std::size_t t = 0; t < agents_.size(); ++t) {
      if (!plan.call_agent[t]) continue;
      const auto& buf = agents_[t].read;
      for (std::size_t i = 0; i < buf.slots(); ++i) {
        if (!buf.alive[i]) continue;
        const AgentId id = AgentId::encode(static_cast<std::uint8_t>(t), buf.home[i], i);
        const std::uint32_t owner = w == 1 ? 0 : partition_.owner(id);
        workers_[owner < w ? owner : 0].agents.push_back(id);
      }
    }
    if (options.shuffle_seed) {
      for (auto& ws : workers_) {
        Rng rng(splitmix64(*options.shuffle_seed) ^ ws.index);
        std::shuffle(ws.agents.begin(), ws.agents.end(), rng);
      }
    }
  }

  bool readable_agent_type(AgentTypeTag t) const {
    const auto& plan = pending_->plan;
    return plan.read_agent[t.value] || plan.call_agent[t.value];
  }

  // Collects the remote sources this worker's agents can read and copies
  // their time-t states. The index set is cached while the graph structure
  // and the partition are unchanged.
  void build_ghosts(detail::WorkerState& ws) {
    auto& g = ws.ghost;
    const auto& plan = pending_->plan;
    const std::uint64_t key = detail::fnv1a(detail::fnv1a(detail::fnv1a(0, structure_version_), partition_version_),
                                            plan.signature);
    const std::size_t na = agents_.size();
    if (g.cache_key != key) {
      g.states.resize(na);
      g.present.resize(na);
      for (std::size_t t = 0; t < na; ++t) {
        g.present[t].assign(agents_[t].read.slots(), 0);
        g.states[t].resize(agents_[t].read.slots() * schema_->agent_types()[t].layout.width());
      }
      g.needed.clear();
      for (const AgentId target : ws.agents) {
        for (std::size_t e = 0; e < edges_.size(); ++e) {
          const auto& info = schema_->edge_types()[e];
          if (!plan.read_edge[e] || !info.source_state_readable()) continue;
          for (EdgeRecord r : edges_[e].records(target)) {
            const AgentId src = r.source();
            if (!readable_agent_type(src.type())) continue;
            if (partition_.owner(src) == ws.index) continue;
            auto& flag = g.present[src.type_tag()][src.local_index()];
            if (!flag) {
              flag = 1;
              g.needed.push_back(src);
            }
          }
        }
      }
      g.cache_key = key;
    }
    for (const AgentId src : g.needed) {
      const std::size_t w = schema_->agent_types()[src.type_tag()].layout.width();
      const StateView s = read_state(src);
      std::copy(s.values().begin(), s.values().end(), g.states[src.type_tag()].begin() + src.local_index() * w);
    }
    ws.ghost_copies = g.needed.size();
  }

  template <typename Fn>
  void run_worker(detail::WorkerState& ws, Fn& fn) {
    try {
      if (partition_.workers() > 1) build_ghosts(ws);
    } catch (...) {
      ws.error = std::current_exception();
      return;
    }
    TransitionContext ctx(*this, ws);
    for (const AgentId id : ws.agents) {
      try {
        ctx.begin(id);
        fn(ctx);
        ctx.end();
      } catch (...) {
        ws.error = std::current_exception();
        ws.error_key = id.canonical_key();
        return;
      }
    }
  }

  EdgeStore& pending_store(EdgeTypeTag t) { return *pending_->edge_write[t.value]; }

  // Applies the worker shards in ascending producer order, which makes the
  // result independent of the worker count and the call order.
  void merge_pending() {
    std::vector<detail::Segment> segments;
    for (const auto& ws : workers_) segments.insert(segments.end(), ws.segments.begin(), ws.segments.end());
    std::sort(segments.begin(), segments.end(),
              [](const detail::Segment& a, const detail::Segment& b) { return a.key < b.key; });

    for (auto& ws : workers_) ws.final_ids.assign(ws.new_agents.size(), AgentId{});
    for (const auto& seg : segments) {
      auto& ws = workers_[seg.worker];
      for (std::size_t i = seg.agents_begin; i < seg.agents_end; ++i) {
        const auto& rec = ws.new_agents[i];
        const auto& info = schema_->agent(rec.type);
        auto& buf = *pending_->agent_write[rec.type.value];
        auto& free = pending_->free_slots[rec.type.value];
        const std::size_t w = info.layout.width();
        std::size_t slot;
        if (!free.empty()) {
          slot = free.back();
          free.pop_back();
          std::copy_n(ws.values.begin() + rec.state_offset, w, buf.states.begin() + slot * w);
          buf.alive[slot] = 1;
          buf.home[slot] = ws.index;
        } else {
          slot = buf.slots();
          if (slot >= AgentId::kMaxSlots) fail(ErrorCode::IndexOverflow, "agent type '" + info.name + "' is full");
          append_slot(buf, info, std::span<const Value>(ws.values.data() + rec.state_offset, w), ws.index);
        }
        const AgentId id = AgentId::encode(rec.type, ws.index, slot);
        ws.final_ids[i] = id;
        partition_.assign(id, ws.index < partition_.workers() ? ws.index : 0);
        pending_->births = true;
        ++stats_.new_agents;
      }
    }

    auto resolve_id = [&](const detail::WorkerState& ws, AgentId id) {
      if (!id.provisional()) return id;
      return ws.final_ids[id.local_index() & ~AgentId::kProvisionalBit];
    };
    for (const auto& seg : segments) {
      auto& ws = workers_[seg.worker];
      for (std::size_t i = seg.edges_begin; i < seg.edges_end; ++i) {
        const auto& e = ws.edges[i];
        const auto& info = schema_->edge(e.type);
        const AgentId target = resolve_id(ws, e.target);
        const AgentId source = resolve_id(ws, e.source);
        if (!alive_next(target)) continue;
        if (info.stores_source() && !alive_next(source)) continue;
        auto& store = pending_store(e.type);
        if (checks_.single_edge_active() && info.single_edge() && store.has(target)) {
          report(ContractReport{ContractKind::SingleEdge, step_, seg.producer, target, info.name});
        }
        store.add(target, source,
                  std::span<const Value>(ws.values.data() + e.state_offset, info.layout.width()));
        ++stats_.new_edges;
      }
    }

    // Immortal agents may not disappear.
    for (std::size_t t = 0; t < agents_.size(); ++t) {
      const auto& info = schema_->agent_types()[t];
      if (!info.immortal || !pending_->agent_write[t]) continue;
      auto& next = *pending_->agent_write[t];
      const auto& cur = agents_[t].read;
      for (std::size_t i = 0; i < cur.slots(); ++i) {
        if (!cur.alive[i] || next.alive[i]) continue;
        const AgentId id = AgentId::encode(static_cast<std::uint8_t>(t), cur.home[i], i);
        if (checks_.enabled()) {
          report(ContractReport{ContractKind::Immortal, step_, id, id, info.name});
        }
        next.alive[i] = 1;
      }
    }
  }

  void commit_pending() {
    auto& p = *pending_;
    bool deaths = false;
    std::vector<std::vector<std::uint64_t>> died(agents_.size());
    for (std::size_t t = 0; t < agents_.size(); ++t) {
      if (!p.agent_write[t]) continue;
      auto& store = agents_[t];
      const auto& next = *p.agent_write[t];
      for (std::size_t i = 0; i < store.read.slots(); ++i) {
        if (store.read.alive[i] && !next.alive[i]) died[t].push_back(i);
      }
      deaths = deaths || !died[t].empty();
      store.read = std::move(*p.agent_write[t]);
      store.free_slots = std::move(p.free_slots[t]);
      store.free_slots.insert(store.free_slots.end(), died[t].begin(), died[t].end());
    }
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      if (p.edge_write[e]) edges_[e] = std::move(*p.edge_write[e]);
    }
    if (deaths) {
      for (auto& store : edges_) {
        const auto& info = store.type();
        for (std::size_t t = 0; t < died.size(); ++t) {
          if (died[t].empty()) continue;
          if (info.single_target && info.single_target->value != t) continue;
          const std::size_t column = info.single_target ? info.single_target->value : t;
          for (auto slot : died[t]) store.clear_slot(column, slot);
        }
        store.remove_dead_sources([this](AgentId src) { return !alive(src); });
      }
    }
    if (deaths || p.births || p.edges_written) ++structure_version_;
    pending_.reset();
    phase_ = Phase::Idle;
  }

  std::shared_ptr<const Schema> schema_;
  std::uint64_t seed_ = 0;
  Phase phase_ = Phase::Init;
  bool started_ = false;
  std::int64_t step_ = 0;
  std::uint64_t ordinal_ = 0;

  std::vector<detail::AgentStore> agents_;
  std::vector<EdgeStore> edges_;
  std::unique_ptr<detail::PendingTransition> pending_;
  std::vector<detail::WorkerState> workers_;

  Partition partition_;
  std::uint64_t partition_version_ = 0;
  std::uint64_t structure_version_ = 0;

  Parameters params_;
  Globals globals_;
  Globals globals_snapshot_;
  CheckConfig checks_;
  std::vector<ContractReport> reports_;

  std::map<std::string, std::shared_ptr<const RasterMap>, std::less<>> rasters_;

  std::vector<StepMetrics> metrics_;
  double step_wall_ms_ = 0.0;
  TransitionStats stats_;

 public:
  Simulation(const Simulation& other)
      : schema_(other.schema_),
        seed_(other.seed_),
        phase_(other.phase_ == Phase::Init ? Phase::Init : Phase::Idle),
        started_(other.started_),
        step_(other.step_),
        ordinal_(other.ordinal_),
        agents_(other.agents_),
        edges_(other.edges_),
        partition_(other.partition_),
        partition_version_(other.partition_version_ + 1),
        structure_version_(other.structure_version_),
        params_(other.params_),
        globals_(other.globals_),
        checks_(other.checks_),
        reports_(other.reports_),
        rasters_(other.rasters_),
        metrics_(other.metrics_) {
    if (other.pending_) fail(ErrorCode::InvalidState, "cannot copy a simulation with a staged transition");
  }
  Simulation& operator=(const Simulation&) = delete;
  Simulation(Simulation&&) noexcept = default;
  Simulation& operator=(Simulation&&) noexcept = default;
};

// ---- Simulation::apply_transition ----------------------------------------

template <typename Fn>
void Simulation::apply_transition(Fn&& fn, const TransitionSpec& spec, const ExecutionOptions& options) {
  if (phase_ == Phase::InTransition) fail(ErrorCode::InvalidState, "apply_transition called from inside a transition");
  if (phase_ == Phase::Init) finish_init();
  if (phase_ == Phase::Pending) commit_pending();
  started_ = true;

  const auto t0 = std::chrono::steady_clock::now();
  begin_pending(resolve(spec));
  globals_snapshot_ = globals_;
  stats_ = TransitionStats{};
  prepare_workers(options);
  phase_ = Phase::InTransition;

  if (workers_.size() == 1) {
    run_worker(workers_[0], fn);
  } else {
    std::vector<std::jthread> threads;
    threads.reserve(workers_.size() - 1);
    for (std::size_t w = 1; w < workers_.size(); ++w) {
      threads.emplace_back([this, &fn, w] { run_worker(workers_[w], fn); });
    }
    run_worker(workers_[0], fn);
  }

  // Deterministic error selection: the failing producer with the smallest key.
  const detail::WorkerState* failed = nullptr;
  for (const auto& ws : workers_) {
    if (ws.error && (!failed || ws.error_key < failed->error_key)) failed = &ws;
  }
  if (failed) {
    auto err = failed->error;
    discard_pending();
    std::rethrow_exception(err);
  }

  try {
    for (auto& ws : workers_) {
      reports_.insert(reports_.end(), ws.reports.begin(), ws.reports.end());
      stats_.ghost_copies += ws.ghost_copies;
      stats_.local_source_reads += ws.local_reads;
      stats_.remote_source_reads += ws.remote_reads;
    }
    merge_pending();
  } catch (...) {
    discard_pending();
    throw;
  }
  phase_ = Phase::Pending;
  ++ordinal_;
  step_wall_ms_ += std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

// ---- NeighborhoodView ----------------------------------------------------

inline StateView NeighborhoodView::state() const { return sim_->read_state(self_); }

inline const EdgeTypeInfo& NeighborhoodView::readable_edge(EdgeTypeTag type) const {
  const auto& info = sim_->schema_->edge(type);
  if (sim_->checks_.read_set_active() && !sim_->pending_->plan.read_edge[type.value]) {
    fail(ErrorCode::TypeNotReadable, "edge type '" + info.name + "' is not in the read set");
  }
  return info;
}

inline EdgeRange NeighborhoodView::edges_to(EdgeTypeTag type) const {
  readable_edge(type);
  return sim_->edges_[type.value].records(self_);
}

inline std::size_t NeighborhoodView::num_edges_to(EdgeTypeTag type) const {
  const auto& info = readable_edge(type);
  if (info.representation == EdgeRepresentation::ExistenceBit ||
      info.representation == EdgeRepresentation::SingleFullEdge) {
    fail(ErrorCode::HintViolation, "edge type '" + info.name + "' is SingleEdge; use has_edge");
  }
  return sim_->edges_[type.value].count(self_);
}

inline bool NeighborhoodView::has_edge(EdgeTypeTag type) const {
  readable_edge(type);
  return sim_->edges_[type.value].has(self_);
}

inline StateView NeighborhoodView::source_state(const EdgeRecord& edge) const {
  const auto& info = edge.type();
  if (!info.stores_source()) {
    fail(ErrorCode::HintViolation, "edge type '" + info.name + "' has IgnoreFrom; source state unavailable");
  }
  if (info.hints.has(EdgeHint::IgnoreSourceState)) {
    fail(ErrorCode::HintViolation, "edge type '" + info.name + "' has IgnoreSourceState");
  }
  const AgentId src = edge.source();
  if (sim_->checks_.read_set_active() && !sim_->readable_agent_type(src.type())) {
    fail(ErrorCode::TypeNotReadable,
         "agent type '" + sim_->schema_->agent(src.type()).name + "' is not in the read set");
  }
  const auto& partition = sim_->partition_;
  if (partition.workers() == 1 || partition.owner(src) == worker_->index) {
    ++worker_->local_reads;
    return sim_->read_state(src);
  }
  const auto& g = worker_->ghost;
  const auto t = src.type_tag();
  const auto i = src.local_index();
  if (t >= g.present.size() || i >= g.present[t].size() || !g.present[t][i]) {
    fail(ErrorCode::InvalidState, "no ghost copy of " + to_string(src) + " on worker " + std::to_string(worker_->index));
  }
  ++worker_->remote_reads;
  const std::size_t w = sim_->schema_->agent_types()[t].layout.width();
  return StateView(std::span<const Value>(g.states[t].data() + i * w, w));
}

inline const Parameters& NeighborhoodView::params() const { return sim_->params_; }
inline const Globals& NeighborhoodView::globals() const { return sim_->globals_snapshot_; }
inline std::int64_t NeighborhoodView::step() const { return sim_->step_; }

// ---- TransitionContext ---------------------------------------------------

inline TransitionContext::TransitionContext(Simulation& sim, detail::WorkerState& worker)
    : NeighborhoodView(sim, worker), msim_(&sim) {}

inline void TransitionContext::begin(AgentId self) {
  self_ = self;
  rng_ = Rng::for_agent(msim_->seed_, static_cast<std::uint64_t>(msim_->step_), msim_->ordinal_, self.canonical_key());
  agents_begin_ = worker_->new_agents.size();
  edges_begin_ = worker_->edges.size();
}

inline void TransitionContext::end() {
  if (worker_->new_agents.size() == agents_begin_ && worker_->edges.size() == edges_begin_) return;
  worker_->segments.push_back(detail::Segment{self_.canonical_key(), self_, worker_->index, agents_begin_,
                                              worker_->new_agents.size(), edges_begin_, worker_->edges.size()});
}

inline std::size_t TransitionContext::own_slot_check_writable() const {
  const auto t = self_.type_tag();
  if (!msim_->pending_->agent_write[t]) {
    if (msim_->checks_.write_set_active()) {
      fail(ErrorCode::TypeNotWritable,
           "agent type '" + msim_->schema_->agent(self_.type()).name + "' is not in the write set");
    }
    return ~std::size_t{0};
  }
  return self_.local_index();
}

inline void TransitionContext::keep_self() {
  const std::size_t slot = own_slot_check_writable();
  if (slot == ~std::size_t{0}) return;
  msim_->pending_->agent_write[self_.type_tag()]->alive[slot] = 1;
}

inline StateSpan TransitionContext::write_self() {
  const std::size_t slot = own_slot_check_writable();
  if (slot == ~std::size_t{0}) {
    // Writes are discarded when the write-set check is off and the type is not written.
    static thread_local std::vector<Value> scratch;
    scratch.assign(msim_->schema_->agent(self_.type()).layout.width(), Value{});
    return StateSpan(scratch);
  }
  auto& buf = *msim_->pending_->agent_write[self_.type_tag()];
  buf.alive[slot] = 1;
  const std::size_t w = msim_->schema_->agent(self_.type()).layout.width();
  return StateSpan(std::span<Value>(buf.states.data() + slot * w, w));
}

inline void TransitionContext::keep_self(std::span<const Value> state) { write_self().assign(state); }

inline void TransitionContext::kill_self() {
  const std::size_t slot = own_slot_check_writable();
  if (slot == ~std::size_t{0}) return;
  msim_->pending_->agent_write[self_.type_tag()]->alive[slot] = 0;
}

inline AgentId TransitionContext::add_agent(AgentTypeTag type, std::span<const Value> state) {
  const auto& info = msim_->schema_->agent(type);
  if (!msim_->pending_->agent_write[type.value]) {
    fail(ErrorCode::TypeNotWritable, "agent type '" + info.name + "' is not in the write set");
  }
  const std::size_t w = info.layout.width();
  if (!state.empty() && state.size() != w) {
    fail(ErrorCode::InvalidArgument, "agent type '" + info.name + "' expects " + std::to_string(w) + " state values");
  }
  const std::size_t offset = worker_->values.size();
  if (state.empty()) {
    worker_->values.resize(offset + w);
  } else {
    worker_->values.insert(worker_->values.end(), state.begin(), state.end());
  }
  const std::size_t seq = worker_->new_agents.size();
  worker_->new_agents.push_back(detail::NewAgentRecord{type, offset});
  return AgentId::encode(type, worker_->index, AgentId::kProvisionalBit | seq);
}

inline void TransitionContext::add_edge(EdgeTypeTag type, AgentId target, AgentId source,
                                        std::span<const Value> state) {
  const auto& info = msim_->schema_->edge(type);
  if (!msim_->pending_->edge_write[type.value]) {
    if (msim_->checks_.write_set_active()) {
      fail(ErrorCode::TypeNotWritable, "edge type '" + info.name + "' is not in the write set");
    }
    return;
  }
  auto own_new_agent = [&](AgentId id) {
    const std::size_t seq = id.local_index() & ~AgentId::kProvisionalBit;
    return id.partition() == worker_->index && seq >= agents_begin_ && seq < worker_->new_agents.size();
  };
  for (AgentId endpoint : {target, source}) {
    if (endpoint.provisional() && !own_new_agent(endpoint)) {
      throw ContractViolation(ContractReport{ContractKind::Endpoint, msim_->step_, self_, endpoint, info.name});
    }
  }
  if (msim_->checks_.single_type_active()) {
    if (auto r = check_single_type(info, target, msim_->step_, self_)) {
      if (msim_->checks_.mode == CheckMode::On) throw ContractViolation(std::move(*r));
      worker_->reports.push_back(std::move(*r));
    }
  }
  const auto values = Simulation::normalized_edge_state(info, state);
  const std::size_t offset = worker_->values.size();
  worker_->values.insert(worker_->values.end(), values.begin(), values.end());
  worker_->edges.push_back(detail::EmittedEdge{type, target, source, offset});
}

}  // namespace gdsim
