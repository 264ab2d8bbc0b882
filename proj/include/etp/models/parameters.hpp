#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "etp/ad/adam.hpp"
#include "etp/ad/tape.hpp"

namespace etp::models {

/// Tape handles for every parameter of a store, looked up by name.
class Bindings {
 public:
  ad::Var operator[](const std::string& name) const;
  std::span<const ad::Var> all() const { return vars_; }

 private:
  friend class ParameterStore;
  std::vector<ad::Var> vars_;
  std::map<std::string, std::size_t> index_;
};

/// Ordered set of named trainable tensors. Names are unique.
class ParameterStore {
 public:
  void add(std::string name, ad::Tensor value);
  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  const ad::Tensor& get(const std::string& name) const;
  ad::Tensor& get(const std::string& name);

  std::span<ad::Parameter> params() { return params_; }
  std::span<const ad::Parameter> params() const { return params_; }
  std::size_t size() const { return params_.size(); }

  /// Records every parameter as a leaf (trainable) or constant.
  Bindings bind(ad::Tape& tape, bool trainable = true) const;
  /// Gradients in store order.
  std::vector<ad::Tensor> gradients(const ad::Gradients& grads, const Bindings& b) const;

 private:
  std::vector<ad::Parameter> params_;
  std::map<std::string, std::size_t> index_;
};

}  // namespace etp::models
