#include "nmn/core/parameter_store.hpp"

#include <algorithm>

#include "nmn/core/errors.hpp"

namespace nmn::core {

std::size_t ParameterStore::add(const std::string& name, std::size_t rows, std::size_t cols) {
  if (by_name_.contains(name)) {
    throw ConfigError("duplicate parameter name '" + name + "'");
  }
  ParameterEntry e{name, Array(rows, cols), {}, {}};
  if (has_moments_) {
    e.moment_z = Array(rows, cols);
    e.moment_v = Array(rows, cols);
  }
  entries_.push_back(std::move(e));
  by_name_.emplace(name, entries_.size() - 1);
  return entries_.size() - 1;
}

std::size_t ParameterStore::index_of(const std::string& name) const {
  const auto it = by_name_.find(name);
  if (it == by_name_.end()) {
    throw ConfigError("no parameter named '" + name + "'");
  }
  return it->second;
}

bool ParameterStore::contains(const std::string& name) const { return by_name_.contains(name); }

std::size_t ParameterStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) {
    n += e.value.size();
  }
  return n;
}

void ParameterStore::enable_moments() {
  if (has_moments_) {
    return;
  }
  has_moments_ = true;
  reset_moments();
}

void ParameterStore::reset_moments() {
  for (auto& e : entries_) {
    e.moment_z = Array(e.value.rows(), e.value.cols());
    e.moment_v = Array(e.value.rows(), e.value.cols());
  }
}

std::vector<double> ParameterStore::flatten() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (const auto& e : entries_) {
    out.insert(out.end(), e.value.flat().begin(), e.value.flat().end());
  }
  return out;
}

void ParameterStore::unflatten(std::span<const double> flat) {
  if (flat.size() != parameter_count()) {
    throw DimensionError("unflatten: length does not match parameter count");
  }
  std::size_t off = 0;
  for (auto& e : entries_) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(off), e.value.size(), e.value.data());
    off += e.value.size();
  }
}

void ParameterStore::assign_values(const ParameterStore& other) {
  if (other.entries_.size() != entries_.size()) {
    throw DimensionError("assign_values: stores have different layouts");
  }
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (!entries_[i].value.same_shape(other.entries_[i].value)) {
      throw DimensionError("assign_values: shape mismatch for '" + entries_[i].name + "'");
    }
    entries_[i].value = other.entries_[i].value;
  }
}

GradientSet::GradientSet(const ParameterStore& store) {
  grads_.reserve(store.size());
  for (const auto& e : store.entries()) {
    grads_.emplace_back(e.value.rows(), e.value.cols());
  }
}

void GradientSet::zero() {
  for (auto& g : grads_) {
    g.fill(0.0);
  }
}

void GradientSet::add(const GradientSet& other) {
  if (other.grads_.size() != grads_.size()) {
    throw DimensionError("GradientSet::add: misaligned gradient sets");
  }
  for (std::size_t i = 0; i < grads_.size(); ++i) {
    axpy(1.0, other.grads_[i].data(), grads_[i].data(), grads_[i].size());
  }
}

void GradientSet::scale(double factor) {
  for (auto& g : grads_) {
    for (auto& v : g.flat()) {
      v *= factor;
    }
  }
}

std::vector<double> GradientSet::flatten() const {
  std::vector<double> out;
  for (const auto& g : grads_) {
    out.insert(out.end(), g.flat().begin(), g.flat().end());
  }
  return out;
}

bool GradientSet::aligned_with(const ParameterStore& store) const {
  if (store.size() != grads_.size()) {
    return false;
  }
  for (std::size_t i = 0; i < grads_.size(); ++i) {
    if (!grads_[i].same_shape(store.value(i))) {
      return false;
    }
  }
  return true;
}

}  // namespace nmn::core
