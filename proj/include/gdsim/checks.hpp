#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "gdsim/errors.hpp"
#include "gdsim/ids.hpp"
#include "gdsim/schema.hpp"

namespace gdsim {

enum class CheckMode : std::uint8_t { On, Off, Warn };

inline std::string_view to_string(CheckMode m) {
  switch (m) {
    case CheckMode::On: return "on";
    case CheckMode::Off: return "off";
    case CheckMode::Warn: return "warn";
  }
  return "?";
}

inline CheckMode parse_check_mode(std::string_view s) {
  if (s == "on") return CheckMode::On;
  if (s == "off") return CheckMode::Off;
  if (s == "warn") return CheckMode::Warn;
  fail(ErrorCode::InvalidArgument, "checks mode must be on, off or warn, got '" + std::string(s) + "'");
}

/// Runtime contract checks. On aborts the offending step, Warn records a
/// report and continues, Off skips the checks entirely.
struct CheckConfig {
  CheckMode mode = CheckMode::On;
  bool single_edge = true;
  bool single_type = true;
  bool write_set = true;
  bool read_set = true;

  bool enabled() const { return mode != CheckMode::Off; }
  bool single_edge_active() const { return enabled() && single_edge; }
  bool single_type_active() const { return enabled() && single_type; }
  bool write_set_active() const { return enabled() && write_set; }
  bool read_set_active() const { return enabled() && read_set; }
};

enum class ContractKind : std::uint8_t { SingleEdge, SingleType, Immortal, Endpoint };

inline std::string_view to_string(ContractKind k) {
  switch (k) {
    case ContractKind::SingleEdge: return "SingleEdge";
    case ContractKind::SingleType: return "SingleType";
    case ContractKind::Immortal: return "Immortal";
    case ContractKind::Endpoint: return "Endpoint";
  }
  return "?";
}

struct ContractReport {
  ContractKind kind = ContractKind::SingleEdge;
  std::int64_t step = 0;
  std::optional<AgentId> producer;  // empty for control-thread (initialization) adds
  AgentId target;
  std::string type_name;

  std::string describe() const {
    std::string s = std::string(to_string(kind)) + " contract of '" + type_name + "' violated at step " +
                    std::to_string(step) + ", target " + to_string(target);
    if (producer) s += ", producer " + to_string(*producer);
    return s;
  }
};

class ContractViolation : public Error {
 public:
  explicit ContractViolation(ContractReport report)
      : Error(ErrorCode::ContractViolation, report.describe()), report_(std::move(report)) {}
  const ContractReport& report() const { return report_; }

 private:
  ContractReport report_;
};

/// Violation iff the target already holds an edge of a SingleEdge type.
inline std::optional<ContractReport> check_single_edge(const EdgeTypeInfo& type, AgentId target,
                                                       bool target_already_has_edge,
                                                       std::int64_t step,
                                                       std::optional<AgentId> producer = {}) {
  if (!type.single_edge() || !target_already_has_edge) return std::nullopt;
  return ContractReport{ContractKind::SingleEdge, step, producer, target, type.name};
}

/// Violation iff the target's type differs from the declared SingleType target.
inline std::optional<ContractReport> check_single_type(const EdgeTypeInfo& type, AgentId target,
                                                       std::int64_t step,
                                                       std::optional<AgentId> producer = {}) {
  if (!type.single_target || target.type() == *type.single_target) return std::nullopt;
  return ContractReport{ContractKind::SingleType, step, producer, target, type.name};
}

}  // namespace gdsim
