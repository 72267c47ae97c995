#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <string>

#include "gdsim/errors.hpp"

namespace gdsim {

struct AgentTypeTag {
  std::uint8_t value = 0;
  friend constexpr auto operator<=>(AgentTypeTag, AgentTypeTag) = default;
};

struct EdgeTypeTag {
  std::uint8_t value = 0;
  friend constexpr auto operator<=>(EdgeTypeTag, EdgeTypeTag) = default;
};

/// Packed agent identifier: type tag (high 8 bits), home partition (next 20
/// bits) and local index (low 36 bits). The local index is the agent's slot
/// in its type's dense state array.
class AgentId {
 public:
  static constexpr unsigned kIndexBits = 36;
  static constexpr unsigned kPartitionBits = 20;
  static constexpr unsigned kTypeBits = 8;
  static constexpr std::uint64_t kIndexMask = (std::uint64_t{1} << kIndexBits) - 1;
  static constexpr std::uint64_t kPartitionMask = (std::uint64_t{1} << kPartitionBits) - 1;
  static constexpr std::uint64_t kMaxIndex = kIndexMask;
  static constexpr std::uint64_t kMaxPartition = kPartitionMask;

  // Index bit 35 marks an id handed out inside a running transition for an
  // agent whose final slot is assigned at merge time.
  static constexpr std::uint64_t kProvisionalBit = std::uint64_t{1} << (kIndexBits - 1);
  static constexpr std::uint64_t kMaxSlots = kProvisionalBit;

  constexpr AgentId() = default;
  constexpr explicit AgentId(std::uint64_t raw) : raw_(raw) {}

  static constexpr AgentId encode(std::uint8_t type_tag, std::uint64_t partition,
                                  std::uint64_t local_index) {
    if (partition > kMaxPartition) {
      fail(ErrorCode::IndexOverflow, "partition " + std::to_string(partition) + " exceeds 20 bits");
    }
    if (local_index > kMaxIndex) {
      fail(ErrorCode::IndexOverflow, "local index exceeds 36 bits");
    }
    return AgentId((std::uint64_t{type_tag} << (kIndexBits + kPartitionBits)) |
                   (partition << kIndexBits) | local_index);
  }

  static constexpr AgentId encode(AgentTypeTag type, std::uint64_t partition,
                                  std::uint64_t local_index) {
    return encode(type.value, partition, local_index);
  }

  constexpr std::uint64_t raw() const noexcept { return raw_; }
  constexpr AgentTypeTag type() const noexcept {
    return AgentTypeTag{static_cast<std::uint8_t>(raw_ >> (kIndexBits + kPartitionBits))};
  }
  constexpr std::uint8_t type_tag() const noexcept { return type().value; }
  constexpr std::uint32_t partition() const noexcept {
    return static_cast<std::uint32_t>((raw_ >> kIndexBits) & kPartitionMask);
  }
  constexpr std::uint64_t local_index() const noexcept { return raw_ & kIndexMask; }
  constexpr bool provisional() const noexcept { return (raw_ & kProvisionalBit) != 0; }

  /// Ordering key that ignores the partition field, so it is the same no
  /// matter which worker created the agent.
  constexpr std::uint64_t canonical_key() const noexcept {
    return (std::uint64_t{type_tag()} << kIndexBits) | local_index();
  }

  friend constexpr bool operator==(AgentId, AgentId) = default;
  friend constexpr auto operator<=>(AgentId, AgentId) = default;

 private:
  std::uint64_t raw_ = 0;
};

inline std::string to_string(AgentId id) {
  return "Agent(" + std::to_string(id.type_tag()) + "," + std::to_string(id.partition()) + "," +
         std::to_string(id.local_index()) + ")";
}

}  // namespace gdsim

template <>
struct std::hash<gdsim::AgentId> {
  std::size_t operator()(gdsim::AgentId id) const noexcept {
    return std::hash<std::uint64_t>{}(id.raw());
  }
};
