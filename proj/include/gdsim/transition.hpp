#pragma once

#include <optional>
#include <string>
#include <vector>

namespace gdsim {

/// Which types a transition touches. Names refer to agent or edge types.
///  - call: agent types whose transition function runs
///  - read: types visible through the neighborhood view
///  - write: types that may change; everything else carries over untouched
///  - keep_existing: written types whose current contents are retained, so
///    the transition only adds to them
struct TransitionSpec {
  std::string name;
  std::vector<std::string> call;
  std::vector<std::string> read;
  std::vector<std::string> write;
  std::vector<std::string> keep_existing;
};

struct ExecutionOptions {
  // Randomizes the order in which each worker invokes its agents.
  std::optional<std::uint64_t> shuffle_seed;
};

}  // namespace gdsim
