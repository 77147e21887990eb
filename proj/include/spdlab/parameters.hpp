#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "spdlab/array.hpp"
#include "spdlab/errors.hpp"

namespace spdlab {

// Named, ordered collection of parameter arrays. Names and shapes are fixed
// after insertion; the version counter advances whenever an optimizer writes
// new values, which lets tapes detect staleness.
class ParameterSet {
 public:
  void add(const std::string& name, Array value) {
    if (index_.count(name)) throw DomainError("ParameterSet: duplicate name '" + name + "'");
    index_[name] = entries_.size();
    entries_.push_back({name, std::move(value)});
  }

  bool has(const std::string& name) const { return index_.count(name) != 0; }

  const Array& get(const std::string& name) const { return entries_[find(name)].value; }

  // Mutable access without a version bump; used by optimizers (which bump
  // explicitly) and by finite-difference probing.
  Array& get_mut(const std::string& name) { return entries_[find(name)].value; }

  std::size_t count() const { return entries_.size(); }
  const std::string& name_at(std::size_t i) const { return entries_[i].name; }
  const Array& value_at(std::size_t i) const { return entries_[i].value; }
  Array& value_at_mut(std::size_t i) { return entries_[i].value; }

  std::uint64_t version() const { return version_; }
  void bump_version() { ++version_; }

  std::size_t total_scalars() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.value.size();
    return n;
  }

  // Zero-filled set with identical names and shapes; gradient accumulator.
  ParameterSet zeros_like() const {
    ParameterSet z;
    for (const auto& e : entries_) z.add(e.name, Array::zeros(e.value.shape()));
    return z;
  }

  void fill(double v) {
    for (auto& e : entries_)
      for (auto& x : e.value.values()) x = v;
  }

  void scale(double a) {
    for (auto& e : entries_)
      for (auto& x : e.value.values()) x *= a;
  }

  // this += a * other (shape-checked entrywise).
  void add_scaled(const ParameterSet& other, double a) {
    require_same_layout(other, "ParameterSet::add_scaled");
    for (std::size_t i = 0; i < entries_.size(); ++i)
      axpy(a, other.entries_[i].value, entries_[i].value);
  }

  void require_same_layout(const ParameterSet& o, const std::string& where) const {
    if (o.entries_.size() != entries_.size())
      throw DimensionError(where + ": entry count mismatch");
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (entries_[i].name != o.entries_[i].name)
        throw DimensionError(where + ": name mismatch at entry " + std::to_string(i));
      if (!entries_[i].value.same_shape(o.entries_[i].value))
        throw DimensionError(where + ": shape mismatch for '" + entries_[i].name + "'");
    }
  }

  bool all_finite() const {
    for (const auto& e : entries_)
      if (!e.value.all_finite()) return false;
    return true;
  }

 private:
  struct Entry {
    std::string name;
    Array value;
  };

  std::size_t find(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw DomainError("ParameterSet: unknown name '" + name + "'");
    return it->second;
  }

  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
  std::uint64_t version_ = 0;
};

}  // namespace spdlab
