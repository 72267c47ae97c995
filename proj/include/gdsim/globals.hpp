#pragma once

#include <map>
#include <string>
#include <string_view>

#include "gdsim/errors.hpp"

namespace gdsim {

/// Named lookup table of doubles; used for both Parameters and Globals.
class NamedScalars {
 public:
  double get(std::string_view name) const {
    auto it = values_.find(name);
    if (it == values_.end()) fail(ErrorCode::UnknownName, "'" + std::string(name) + "'");
    return it->second;
  }
  bool contains(std::string_view name) const { return values_.find(name) != values_.end(); }
  void put(std::string_view name, double value) { values_.insert_or_assign(std::string(name), value); }
  const std::map<std::string, double, std::less<>>& values() const { return values_; }

 private:
  std::map<std::string, double, std::less<>> values_;
};

/// Constant for the whole run; frozen once the first transition starts.
class Parameters : public NamedScalars {};

/// Mutable between transitions only; workers see a snapshot.
class Globals : public NamedScalars {};

enum class Reduce { Sum, Min, Max, Count };

}  // namespace gdsim
