#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "etp/ad/tensor.hpp"

namespace etp::ad {

/// A named trainable tensor.
struct Parameter {
  std::string name;
  Tensor value;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::int64_t step = 0;
};

/// Raised when a gradient contains NaN or infinity. The parameters and the
/// optimizer state are left untouched.
class NonFiniteGradient : public std::runtime_error {
 public:
  explicit NonFiniteGradient(std::string parameter)
      : std::runtime_error("non-finite gradient for parameter '" + parameter + "'"),
        parameter_(std::move(parameter)) {}
  const std::string& parameter() const { return parameter_; }

 private:
  std::string parameter_;
};

/// One bias-corrected Adam update. State moments are allocated lazily on
/// the first call.
void adam_step(std::span<Parameter> params, std::span<const Tensor> grads, AdamState& state,
               const AdamConfig& config);

}  // namespace etp::ad
