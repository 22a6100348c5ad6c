#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "nmn/core/array.hpp"

namespace nmn::core {

struct ParameterEntry {
  std::string name;
  Array value;
  // Adam first (z) and second (v) moments; same shape as value when present.
  Array moment_z;
  Array moment_v;
};

/// Ordered, named collection of the trainable arrays of one network.
/// Iteration order is insertion order, so flatten() is reproducible.
class ParameterStore {
 public:
  /// Adds a zero-initialised entry; throws ConfigError on a duplicate name.
  std::size_t add(const std::string& name, std::size_t rows, std::size_t cols);

  [[nodiscard]] std::size_t index_of(const std::string& name) const;
  [[nodiscard]] bool contains(const std::string& name) const;

  ParameterEntry& entry(std::size_t i) { return entries_[i]; }
  [[nodiscard]] const ParameterEntry& entry(std::size_t i) const { return entries_[i]; }
  Array& value(std::size_t i) { return entries_[i].value; }
  [[nodiscard]] const Array& value(std::size_t i) const { return entries_[i].value; }

  [[nodiscard]] std::size_t size() const { return entries_.size(); }
  [[nodiscard]] std::size_t parameter_count() const;
  [[nodiscard]] const std::vector<ParameterEntry>& entries() const { return entries_; }

  [[nodiscard]] bool has_moments() const { return has_moments_; }
  /// Allocates zeroed Adam moments for every entry (idempotent).
  void enable_moments();
  void reset_moments();

  [[nodiscard]] std::vector<double> flatten() const;
  void unflatten(std::span<const double> flat);

  /// Copies values (not moments) from a store with identical layout.
  void assign_values(const ParameterStore& other);

 private:
  std::vector<ParameterEntry> entries_;
  std::unordered_map<std::string, std::size_t> by_name_;
  bool has_moments_ = false;
};

/// Gradient arrays aligned one-to-one with a ParameterStore.
class GradientSet {
 public:
  GradientSet() = default;
  explicit GradientSet(const ParameterStore& store);

  Array& operator[](std::size_t i) { return grads_[i]; }
  const Array& operator[](std::size_t i) const { return grads_[i]; }
  [[nodiscard]] std::size_t size() const { return grads_.size(); }

  void zero();
  void add(const GradientSet& other);
  void scale(double factor);
  [[nodiscard]] std::vector<double> flatten() const;
  [[nodiscard]] bool aligned_with(const ParameterStore& store) const;

 private:
  std::vector<Array> grads_;
};

}  // namespace nmn::core
