#pragma once

#include <bit>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gdsim/errors.hpp"

namespace gdsim {

enum class ScalarKind : std::uint8_t { Int64, Float64, Bool, Enum };

/// One 64-bit state slot. Agent and edge states are flat arrays of these.
class Value {
 public:
  constexpr Value() = default;
  constexpr Value(double v) : bits_(std::bit_cast<std::uint64_t>(v)) {}
  constexpr Value(std::int64_t v) : bits_(static_cast<std::uint64_t>(v)) {}
  constexpr Value(int v) : bits_(static_cast<std::uint64_t>(std::int64_t{v})) {}
  constexpr Value(bool v) : bits_(v ? 1u : 0u) {}

  static constexpr Value from_raw(std::uint64_t bits) {
    Value v;
    v.bits_ = bits;
    return v;
  }

  constexpr double as_f64() const { return std::bit_cast<double>(bits_); }
  constexpr std::int64_t as_i64() const { return static_cast<std::int64_t>(bits_); }
  constexpr bool as_bool() const { return bits_ != 0; }
  constexpr std::uint64_t raw() const { return bits_; }

  friend constexpr bool operator==(Value, Value) = default;

 private:
  std::uint64_t bits_ = 0;
};

static_assert(sizeof(Value) == sizeof(std::uint64_t));

struct FieldDecl {
  std::string name;
  ScalarKind kind = ScalarKind::Float64;
};

class StateLayout {
 public:
  StateLayout() = default;
  explicit StateLayout(std::vector<FieldDecl> fields) : fields_(std::move(fields)) {
    for (std::size_t i = 0; i < fields_.size(); ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        if (fields_[i].name == fields_[j].name) {
          fail(ErrorCode::DuplicateName, "state field '" + fields_[i].name + "'");
        }
      }
    }
  }

  std::size_t width() const noexcept { return fields_.size(); }
  bool empty() const noexcept { return fields_.empty(); }
  const std::vector<FieldDecl>& fields() const noexcept { return fields_; }

  std::size_t field(std::string_view name) const {
    for (std::size_t i = 0; i < fields_.size(); ++i) {
      if (fields_[i].name == name) return i;
    }
    fail(ErrorCode::UnknownName, "state field '" + std::string(name) + "'");
  }

 private:
  std::vector<FieldDecl> fields_;
};

/// Read-only view of one state record.
class StateView {
 public:
  StateView() = default;
  explicit StateView(std::span<const Value> values) : values_(values) {}

  std::size_t size() const noexcept { return values_.size(); }
  std::span<const Value> values() const noexcept { return values_; }
  Value operator[](std::size_t field) const { return values_[field]; }

  double f64(std::size_t field) const { return values_[field].as_f64(); }
  std::int64_t i64(std::size_t field) const { return values_[field].as_i64(); }
  bool flag(std::size_t field) const { return values_[field].as_bool(); }

  std::vector<Value> to_vector() const { return {values_.begin(), values_.end()}; }

 private:
  std::span<const Value> values_;
};

/// Writable view into a state record owned by a buffer.
class StateSpan {
 public:
  StateSpan() = default;
  explicit StateSpan(std::span<Value> values) : values_(values) {}

  std::size_t size() const noexcept { return values_.size(); }
  void set(std::size_t field, Value v) { values_[field] = v; }
  Value operator[](std::size_t field) const { return values_[field]; }
  StateView view() const { return StateView(values_); }

  void assign(std::span<const Value> values) {
    if (values.size() != values_.size()) {
      fail(ErrorCode::InvalidArgument, "state record has " + std::to_string(values.size()) +
                                           " values, layout expects " +
                                           std::to_string(values_.size()));
    }
    std::copy(values.begin(), values.end(), values_.begin());
  }

 private:
  std::span<Value> values_;
};

}  // namespace gdsim
