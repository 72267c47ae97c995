#pragma once

#include <cstddef>
#include <cstdint>
#include <iterator>
#include <span>
#include <vector>

#include "gdsim/errors.hpp"
#include "gdsim/ids.hpp"
#include "gdsim/schema.hpp"
#include "gdsim/value.hpp"

namespace gdsim {

/// One incoming edge as seen by its target. Fields dropped by the edge
/// type's hints are not available.
class EdgeRecord {
 public:
  EdgeRecord(const Value* entry, const EdgeTypeInfo* type) : entry_(entry), type_(type) {}

  const EdgeTypeInfo& type() const { return *type_; }
  bool has_source() const { return type_->stores_source(); }

  AgentId source() const {
    if (!type_->stores_source()) {
      fail(ErrorCode::HintViolation, "edge type '" + type_->name + "' does not store the source (IgnoreFrom)");
    }
    return AgentId(entry_[0].raw());
  }

  StateView state() const {
    if (!type_->stores_state()) {
      fail(ErrorCode::HintViolation, "edge type '" + type_->name + "' is Stateless");
    }
    return StateView(std::span<const Value>(entry_ + (type_->stores_source() ? 1 : 0),
                                            type_->layout.width()));
  }

 private:
  const Value* entry_;
  const EdgeTypeInfo* type_;
};

/// Range over a target's incoming entries in insertion order. Entries with
/// width 0 (state-only edge types without fields) are iterated by count.
class EdgeRange {
 public:
  class iterator {
   public:
    using iterator_category = std::forward_iterator_tag;
    using value_type = EdgeRecord;
    using difference_type = std::ptrdiff_t;

    iterator() = default;
    iterator(const Value* p, std::size_t i, std::size_t stride, const EdgeTypeInfo* t)
        : p_(p), i_(i), stride_(stride), type_(t) {}

    EdgeRecord operator*() const { return EdgeRecord(p_ + i_ * stride_, type_); }
    iterator& operator++() {
      ++i_;
      return *this;
    }
    iterator operator++(int) {
      auto copy = *this;
      ++i_;
      return copy;
    }
    friend bool operator==(const iterator& a, const iterator& b) { return a.i_ == b.i_; }

   private:
    const Value* p_ = nullptr;
    std::size_t i_ = 0;
    std::size_t stride_ = 0;
    const EdgeTypeInfo* type_ = nullptr;
  };

  EdgeRange() = default;
  EdgeRange(const Value* data, std::size_t count, std::size_t stride, const EdgeTypeInfo* type)
      : data_(data), count_(count), stride_(stride), type_(type) {}

  iterator begin() const { return {data_, 0, stride_, type_}; }
  iterator end() const { return {data_, count_, stride_, type_}; }
  std::size_t size() const { return count_; }
  bool empty() const { return count_ == 0; }
  EdgeRecord operator[](std::size_t i) const { return EdgeRecord(data_ + i * stride_, type_); }

 private:
  const Value* data_ = nullptr;
  std::size_t count_ = 0;
  std::size_t stride_ = 0;
  const EdgeTypeInfo* type_ = nullptr;
};

/// Container for all edges of one type, stored under their targets. The
/// physical layout is chosen by the type's representation; add() discards
/// whatever the representation cannot hold.
class EdgeStore {
 public:
  EdgeStore() = default;
  EdgeStore(const EdgeTypeInfo* type, std::size_t num_agent_types)
      : type_(type), width_(type->entry_width()), columns_(num_agent_types) {}

  const EdgeTypeInfo& type() const { return *type_; }

  /// Column used for a target. SingleType edges index a single dense column
  /// by local index only, so a target of the wrong type aliases a slot of
  /// the declared type.
  std::size_t column_of(AgentId target) const {
    return type_->single_target ? type_->single_target->value : target.type_tag();
  }

  /// Returns true when the target already held an edge (relevant for
  /// single-edge types). For SingleFullEdge the new entry replaces the old.
  bool add(AgentId target, AgentId source, std::span<const Value> state) {
    Column& col = columns_[column_of(target)];
    const std::size_t idx = target.local_index();
    switch (type_->representation) {
      case EdgeRepresentation::FullEdgeList:
      case EdgeRepresentation::SourceOnlyList:
      case EdgeRepresentation::StateOnlyList: {
        if (width_ == 0) {
          if (idx >= col.counts.size()) col.counts.resize(grow(idx), 0);
          return col.counts[idx]++ > 0;
        }
        if (idx >= col.lists.size()) col.lists.resize(grow(idx));
        auto& list = col.lists[idx];
        const bool had = !list.empty();
        if (type_->stores_source()) list.push_back(Value::from_raw(source.raw()));
        if (type_->stores_state()) list.insert(list.end(), state.begin(), state.end());
        return had;
      }
      case EdgeRepresentation::CountOnly: {
        if (idx >= col.counts.size()) col.counts.resize(grow(idx), 0);
        return col.counts[idx]++ > 0;
      }
      case EdgeRepresentation::ExistenceBit: {
        if (idx >= col.bits.size()) col.bits.resize(grow(idx), false);
        const bool had = col.bits[idx];
        col.bits[idx] = true;
        return had;
      }
      case EdgeRepresentation::SingleFullEdge: {
        if (idx >= col.present.size()) {
          col.present.resize(grow(idx), 0);
          col.singles.resize(col.present.size() * width_);
        }
        const bool had = col.present[idx] != 0;
        col.present[idx] = 1;
        Value* out = col.singles.data() + idx * width_;
        if (type_->stores_source()) *out++ = Value::from_raw(source.raw());
        if (type_->stores_state()) std::copy(state.begin(), state.end(), out);
        return had;
      }
    }
    return false;
  }

  std::size_t count(AgentId target) const {
    const Column& col = columns_[column_of(target)];
    const std::size_t idx = target.local_index();
    switch (type_->representation) {
      case EdgeRepresentation::FullEdgeList:
      case EdgeRepresentation::SourceOnlyList:
      case EdgeRepresentation::StateOnlyList:
        if (width_ == 0) return idx < col.counts.size() ? col.counts[idx] : 0;
        return idx < col.lists.size() ? col.lists[idx].size() / width_ : 0;
      case EdgeRepresentation::CountOnly:
        return idx < col.counts.size() ? col.counts[idx] : 0;
      case EdgeRepresentation::ExistenceBit:
        return idx < col.bits.size() && col.bits[idx] ? 1 : 0;
      case EdgeRepresentation::SingleFullEdge:
        return idx < col.present.size() && col.present[idx] ? 1 : 0;
    }
    return 0;
  }

  bool has(AgentId target) const { return count(target) > 0; }

  /// Entries of a target. Only valid for representations with records.
  EdgeRange records(AgentId target) const {
    const Column& col = columns_[column_of(target)];
    const std::size_t idx = target.local_index();
    switch (type_->representation) {
      case EdgeRepresentation::FullEdgeList:
      case EdgeRepresentation::SourceOnlyList:
      case EdgeRepresentation::StateOnlyList:
        if (width_ == 0) {
          return EdgeRange(nullptr, idx < col.counts.size() ? col.counts[idx] : 0, 0, type_);
        }
        if (idx >= col.lists.size()) return EdgeRange(nullptr, 0, width_, type_);
        return EdgeRange(col.lists[idx].data(), col.lists[idx].size() / width_, width_, type_);
      case EdgeRepresentation::SingleFullEdge:
        if (idx >= col.present.size() || !col.present[idx]) return EdgeRange(nullptr, 0, width_, type_);
        return EdgeRange(col.singles.data() + idx * width_, 1, width_, type_);
      case EdgeRepresentation::CountOnly:
      case EdgeRepresentation::ExistenceBit:
        break;
    }
    fail(ErrorCode::HintViolation, "edge type '" + type_->name + "' stores no records (" +
                                       std::string(to_string(type_->representation)) + ")");
  }

  /// Pre-sizes a column so adds for existing slots never reallocate it.
  void reserve_slots(std::size_t column, std::size_t slots) {
    Column& col = columns_[column];
    switch (type_->representation) {
      case EdgeRepresentation::FullEdgeList:
      case EdgeRepresentation::SourceOnlyList:
      case EdgeRepresentation::StateOnlyList:
        if (width_ == 0) {
          if (col.counts.size() < slots) col.counts.resize(slots, 0);
        } else if (col.lists.size() < slots) {
          col.lists.resize(slots);
        }
        break;
      case EdgeRepresentation::CountOnly:
        if (col.counts.size() < slots) col.counts.resize(slots, 0);
        break;
      case EdgeRepresentation::ExistenceBit:
        if (col.bits.size() < slots) col.bits.resize(slots, false);
        break;
      case EdgeRepresentation::SingleFullEdge:
        if (col.present.size() < slots) {
          col.present.resize(slots, 0);
          col.singles.resize(slots * width_);
        }
        break;
    }
  }

  std::size_t column_size(std::size_t column) const {
    const Column& col = columns_[column];
    return std::max({col.lists.size(), col.counts.size(), col.bits.size(), col.present.size()});
  }
  std::size_t num_columns() const { return columns_.size(); }

  void clear_slot(std::size_t column, std::size_t idx) {
    Column& col = columns_[column];
    if (idx < col.lists.size()) col.lists[idx].clear();
    if (idx < col.counts.size()) col.counts[idx] = 0;
    if (idx < col.bits.size()) col.bits[idx] = false;
    if (idx < col.present.size()) col.present[idx] = 0;
  }

  /// Drops every entry whose stored source satisfies dead(source). Returns
  /// the number of entries removed. No-op when sources are not stored.
  template <typename DeadFn>
  std::size_t remove_dead_sources(DeadFn&& dead) {
    if (!type_->stores_source()) return 0;
    std::size_t removed = 0;
    for (auto& col : columns_) {
      for (auto& list : col.lists) {
        std::size_t out = 0;
        for (std::size_t in = 0; in < list.size(); in += width_) {
          if (dead(AgentId(list[in].raw()))) {
            ++removed;
            continue;
          }
          if (out != in) std::copy_n(list.begin() + in, width_, list.begin() + out);
          out += width_;
        }
        list.resize(out);
      }
      for (std::size_t i = 0; i < col.present.size(); ++i) {
        if (col.present[i] && dead(AgentId(col.singles[i * width_].raw()))) {
          col.present[i] = 0;
          ++removed;
        }
      }
    }
    return removed;
  }

  std::size_t total_edges() const {
    std::size_t n = 0;
    for (std::size_t c = 0; c < columns_.size(); ++c) {
      const std::size_t size = column_size(c);
      for (std::size_t i = 0; i < size; ++i) {
        n += count(AgentId::encode(static_cast<std::uint8_t>(c), 0, i));
      }
    }
    return n;
  }

 private:
  struct Column {
    std::vector<std::vector<Value>> lists;
    std::vector<std::uint32_t> counts;
    std::vector<bool> bits;
    std::vector<std::uint8_t> present;
    std::vector<Value> singles;
  };

  static std::size_t grow(std::size_t idx) { return std::max<std::size_t>(idx + 1, (idx + 1) * 3 / 2); }

  const EdgeTypeInfo* type_ = nullptr;
  std::size_t width_ = 0;
  std::vector<Column> columns_;
};

}  // namespace gdsim
