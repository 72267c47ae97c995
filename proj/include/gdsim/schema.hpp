#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gdsim/errors.hpp"
#include "gdsim/ids.hpp"
#include "gdsim/value.hpp"

namespace gdsim {

enum class EdgeHint : std::uint8_t {
  Stateless = 1u << 0,
  IgnoreFrom = 1u << 1,
  IgnoreSourceState = 1u << 2,
  SingleEdge = 1u << 3,
  SingleType = 1u << 4,
};

class HintSet {
 public:
  constexpr HintSet() = default;
  constexpr HintSet(EdgeHint h) : bits_(static_cast<std::uint8_t>(h)) {}
  constexpr HintSet(std::initializer_list<EdgeHint> hints) {
    for (auto h : hints) bits_ |= static_cast<std::uint8_t>(h);
  }

  static constexpr HintSet from_bits(std::uint8_t bits) {
    HintSet s;
    s.bits_ = bits & 0x1f;
    return s;
  }

  constexpr bool has(EdgeHint h) const { return (bits_ & static_cast<std::uint8_t>(h)) != 0; }
  constexpr bool contains(HintSet other) const { return (bits_ & other.bits_) == other.bits_; }
  constexpr HintSet with(EdgeHint h) const { return from_bits(bits_ | static_cast<std::uint8_t>(h)); }
  constexpr std::uint8_t bits() const { return bits_; }
  constexpr bool empty() const { return bits_ == 0; }

  friend constexpr HintSet operator|(HintSet a, HintSet b) { return from_bits(a.bits_ | b.bits_); }
  friend constexpr bool operator==(HintSet, HintSet) = default;

 private:
  std::uint8_t bits_ = 0;
};

constexpr HintSet operator|(EdgeHint a, EdgeHint b) { return HintSet(a) | HintSet(b); }

enum class EdgeRepresentation : std::uint8_t {
  FullEdgeList,    // per target: (source, state) entries
  SourceOnlyList,  // per target: sources
  StateOnlyList,   // per target: states
  CountOnly,       // per target: multiplicity
  ExistenceBit,    // per target: one bit
  SingleFullEdge,  // per target: at most one entry, fields dropped per hints
};

inline constexpr std::string_view to_string(EdgeRepresentation rep) {
  switch (rep) {
    case EdgeRepresentation::FullEdgeList: return "FullEdgeList";
    case EdgeRepresentation::SourceOnlyList: return "SourceOnlyList";
    case EdgeRepresentation::StateOnlyList: return "StateOnlyList";
    case EdgeRepresentation::CountOnly: return "CountOnly";
    case EdgeRepresentation::ExistenceBit: return "ExistenceBit";
    case EdgeRepresentation::SingleFullEdge: return "SingleFullEdge";
  }
  return "?";
}

inline bool hints_legal(HintSet hints) {
  const bool single_pair = hints.has(EdgeHint::SingleEdge) && hints.has(EdgeHint::SingleType);
  return !single_pair || (hints.has(EdgeHint::Stateless) && hints.has(EdgeHint::IgnoreFrom));
}

/// Maps a legal hint set onto the container shape used for that edge type.
/// SingleType and IgnoreSourceState never change the shape: the first only
/// changes how targets are indexed, the second only what ghost exchange ships.
inline EdgeRepresentation storage_plan_for(HintSet hints) {
  if (!hints_legal(hints)) {
    fail(ErrorCode::IllegalHintCombination,
         "SingleEdge and SingleType require Stateless and IgnoreFrom");
  }
  const bool stateless = hints.has(EdgeHint::Stateless);
  const bool no_source = hints.has(EdgeHint::IgnoreFrom);
  if (hints.has(EdgeHint::SingleEdge)) {
    return stateless && no_source ? EdgeRepresentation::ExistenceBit
                                  : EdgeRepresentation::SingleFullEdge;
  }
  if (stateless && no_source) return EdgeRepresentation::CountOnly;
  if (stateless) return EdgeRepresentation::SourceOnlyList;
  if (no_source) return EdgeRepresentation::StateOnlyList;
  return EdgeRepresentation::FullEdgeList;
}

struct AgentTypeDecl {
  std::string name;
  std::vector<FieldDecl> state;
  bool immortal = false;
};

struct EdgeTypeDecl {
  std::string name;
  std::vector<FieldDecl> state;
  HintSet hints;
  std::optional<std::string> single_type_target;
};

struct AgentTypeInfo {
  std::string name;
  AgentTypeTag tag;
  StateLayout layout;
  bool immortal = false;
};

struct EdgeTypeInfo {
  std::string name;
  EdgeTypeTag tag;
  StateLayout layout;
  HintSet hints;
  EdgeRepresentation representation = EdgeRepresentation::FullEdgeList;
  std::optional<AgentTypeTag> single_target;

  bool stores_source() const { return !hints.has(EdgeHint::IgnoreFrom); }
  bool stores_state() const { return !hints.has(EdgeHint::Stateless); }
  bool source_state_readable() const {
    return stores_source() && !hints.has(EdgeHint::IgnoreSourceState);
  }
  bool has_records() const {
    return representation != EdgeRepresentation::CountOnly &&
           representation != EdgeRepresentation::ExistenceBit;
  }
  bool single_edge() const { return hints.has(EdgeHint::SingleEdge); }
  std::size_t state_width() const { return stores_state() ? layout.width() : 0; }
  /// Values per stored entry: optional source id followed by the state.
  std::size_t entry_width() const { return (stores_source() ? 1 : 0) + state_width(); }
};

/// Registry of agent and edge types. Built before the simulation starts and
/// immutable afterwards.
class Schema {
 public:
  static constexpr std::size_t kMaxTypes = 255;

  AgentTypeTag register_agent_type(AgentTypeDecl decl) {
    if (find_agent_type(decl.name)) fail(ErrorCode::DuplicateName, "agent type '" + decl.name + "'");
    if (agents_.size() >= kMaxTypes) fail(ErrorCode::TooManyTypes, "at most 255 agent types");
    AgentTypeTag tag{static_cast<std::uint8_t>(agents_.size())};
    agents_.push_back(AgentTypeInfo{std::move(decl.name), tag, StateLayout(std::move(decl.state)),
                                    decl.immortal});
    return tag;
  }

  EdgeTypeTag register_edge_type(EdgeTypeDecl decl) {
    if (find_edge_type(decl.name)) fail(ErrorCode::DuplicateName, "edge type '" + decl.name + "'");
    if (edges_.size() >= kMaxTypes) fail(ErrorCode::TooManyTypes, "at most 255 edge types");
    const EdgeRepresentation rep = storage_plan_for(decl.hints);
    std::optional<AgentTypeTag> target;
    if (decl.hints.has(EdgeHint::SingleType)) {
      if (!decl.single_type_target) {
        fail(ErrorCode::InvalidArgument, "SingleType edge '" + decl.name + "' needs a target type");
      }
      target = find_agent_type(*decl.single_type_target);
      if (!target) fail(ErrorCode::UnknownAgentType, *decl.single_type_target);
    } else if (decl.single_type_target) {
      fail(ErrorCode::InvalidArgument,
           "edge '" + decl.name + "' names a target type without the SingleType hint");
    }
    EdgeTypeTag tag{static_cast<std::uint8_t>(edges_.size())};
    edges_.push_back(EdgeTypeInfo{std::move(decl.name), tag, StateLayout(std::move(decl.state)),
                                  decl.hints, rep, target});
    return tag;
  }

  std::optional<AgentTypeTag> find_agent_type(std::string_view name) const {
    for (const auto& a : agents_) {
      if (a.name == name) return a.tag;
    }
    return std::nullopt;
  }
  std::optional<EdgeTypeTag> find_edge_type(std::string_view name) const {
    for (const auto& e : edges_) {
      if (e.name == name) return e.tag;
    }
    return std::nullopt;
  }

  AgentTypeTag agent_tag(std::string_view name) const {
    if (auto t = find_agent_type(name)) return *t;
    fail(ErrorCode::UnknownAgentType, std::string(name));
  }
  EdgeTypeTag edge_tag(std::string_view name) const {
    if (auto t = find_edge_type(name)) return *t;
    fail(ErrorCode::UnknownName, "edge type '" + std::string(name) + "'");
  }

  const AgentTypeInfo& agent(AgentTypeTag tag) const {
    if (tag.value >= agents_.size()) fail(ErrorCode::UnknownAgentType, std::to_string(tag.value));
    return agents_[tag.value];
  }
  const EdgeTypeInfo& edge(EdgeTypeTag tag) const {
    if (tag.value >= edges_.size()) fail(ErrorCode::UnknownName, "edge tag " + std::to_string(tag.value));
    return edges_[tag.value];
  }

  std::size_t num_agent_types() const { return agents_.size(); }
  std::size_t num_edge_types() const { return edges_.size(); }
  const std::vector<AgentTypeInfo>& agent_types() const { return agents_; }
  const std::vector<EdgeTypeInfo>& edge_types() const { return edges_; }

 private:
  std::vector<AgentTypeInfo> agents_;
  std::vector<EdgeTypeInfo> edges_;
};

}  // namespace gdsim
