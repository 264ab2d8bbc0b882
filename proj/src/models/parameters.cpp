#include "etp/models/parameters.hpp"

#include <stdexcept>

namespace etp::models {

ad::Var Bindings::operator[](const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("no parameter named '" + name + "'");
  return vars_[it->second];
}

void ParameterStore::add(std::string name, ad::Tensor value) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter '" + name + "'");
  index_.emplace(name, params_.size());
  params_.push_back({std::move(name), std::move(value)});
}

const ad::Tensor& ParameterStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("no parameter named '" + name + "'");
  return params_[it->second].value;
}

ad::Tensor& ParameterStore::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("no parameter named '" + name + "'");
  return params_[it->second].value;
}

Bindings ParameterStore::bind(ad::Tape& tape, bool trainable) const {
  Bindings b;
  b.vars_.reserve(params_.size());
  for (const auto& p : params_) {
    b.index_.emplace(p.name, b.vars_.size());
    b.vars_.push_back(trainable ? tape.leaf(p.value) : tape.constant(p.value));
  }
  return b;
}

std::vector<ad::Tensor> ParameterStore::gradients(const ad::Gradients& grads,
                                                  const Bindings& b) const {
  std::vector<ad::Tensor> out;
  out.reserve(params_.size());
  for (ad::Var v : b.all()) out.push_back(grads[v]);
  return out;
}

}  // namespace etp::models
