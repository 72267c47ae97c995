#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "gdsim/errors.hpp"
#include "gdsim/ids.hpp"

namespace gdsim {

enum class PartitionStrategy : std::uint8_t { ContiguousBlock, RoundRobin, GreedyEdgeCut };

inline std::string_view to_string(PartitionStrategy s) {
  switch (s) {
    case PartitionStrategy::ContiguousBlock: return "contiguous";
    case PartitionStrategy::RoundRobin: return "round-robin";
    case PartitionStrategy::GreedyEdgeCut: return "greedy-edge-cut";
  }
  return "?";
}

inline PartitionStrategy parse_partition_strategy(std::string_view s) {
  if (s == "contiguous" || s == "contiguous-block") return PartitionStrategy::ContiguousBlock;
  if (s == "round-robin") return PartitionStrategy::RoundRobin;
  if (s == "greedy" || s == "greedy-edge-cut") return PartitionStrategy::GreedyEdgeCut;
  fail(ErrorCode::InvalidArgument, "unknown partition strategy '" + std::string(s) + "'");
}

/// Assignment of agents to workers. Slots never seen by the partition
/// belong to worker 0.
class Partition {
 public:
  Partition() = default;
  Partition(std::uint32_t workers, PartitionStrategy strategy, std::size_t num_agent_types)
      : workers_(workers), strategy_(strategy), owner_(num_agent_types) {
    if (workers == 0) fail(ErrorCode::InvalidArgument, "worker count must be >= 1");
    if (workers - 1 > AgentId::kMaxPartition) fail(ErrorCode::IndexOverflow, "too many workers");
  }

  std::uint32_t workers() const { return workers_; }
  PartitionStrategy strategy() const { return strategy_; }

  std::uint32_t owner(AgentId id) const {
    const auto t = id.type_tag();
    if (t >= owner_.size()) return 0;
    const auto& v = owner_[t];
    const auto i = id.local_index();
    return i < v.size() ? v[i] : 0;
  }

  void assign(AgentId id, std::uint32_t worker) {
    if (worker >= workers_) fail(ErrorCode::InvalidArgument, "worker index out of range");
    const auto t = id.type_tag();
    if (t >= owner_.size()) owner_.resize(t + 1);
    auto& v = owner_[t];
    const auto i = id.local_index();
    if (i >= v.size()) v.resize(i + 1, 0);
    v[i] = worker;
  }

 private:
  std::uint32_t workers_ = 1;
  PartitionStrategy strategy_ = PartitionStrategy::ContiguousBlock;
  std::vector<std::vector<std::uint32_t>> owner_;
};

}  // namespace gdsim
