#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "liam/nn/tensor.hpp"

namespace liam::nn {

/// A named parameter with its gradient accumulator and Adam moments.
/// All four arrays share one shape.
template <typename Scalar>
struct Parameter {
  std::string name;
  Tensor<Scalar> value;
  Tensor<Scalar> grad;
  Tensor<Scalar> adam_m;
  Tensor<Scalar> adam_v;
  std::int64_t step = 0;

  void zero_grad() { grad.setZero(); }
};

/// Insertion-ordered collection of parameters. Entries have stable
/// addresses for the lifetime of the store, so layers may keep pointers.
template <typename Scalar>
class ParameterStore {
 public:
  ParameterStore() = default;
  ParameterStore(const ParameterStore&) = delete;
  ParameterStore& operator=(const ParameterStore&) = delete;
  ParameterStore(ParameterStore&&) noexcept = default;
  ParameterStore& operator=(ParameterStore&&) noexcept = default;

  Parameter<Scalar>& add(const std::string& name, Tensor<Scalar> init) {
    if (index_.count(name) != 0) {
      throw UsageError("parameter '" + name + "' registered twice");
    }
    auto entry = std::make_unique<Parameter<Scalar>>();
    entry->name = name;
    entry->grad = Tensor<Scalar>::Zero(init.rows(), init.cols());
    entry->adam_m = Tensor<Scalar>::Zero(init.rows(), init.cols());
    entry->adam_v = Tensor<Scalar>::Zero(init.rows(), init.cols());
    entry->value = std::move(init);
    index_.emplace(name, entries_.size());
    entries_.push_back(std::move(entry));
    return *entries_.back();
  }

  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  Parameter<Scalar>& at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw UsageError("unknown parameter '" + name + "'");
    return *entries_[it->second];
  }
  const Parameter<Scalar>& at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw UsageError("unknown parameter '" + name + "'");
    return *entries_[it->second];
  }

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  Parameter<Scalar>& operator[](std::size_t i) { return *entries_[i]; }
  const Parameter<Scalar>& operator[](std::size_t i) const { return *entries_[i]; }

  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.cbegin(); }
  auto end() const { return entries_.cend(); }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += static_cast<std::size_t>(e->value.size());
    return n;
  }

  void zero_grad() {
    for (auto& e : entries_) e->zero_grad();
  }

 private:
  std::vector<std::unique_ptr<Parameter<Scalar>>> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace liam::nn
