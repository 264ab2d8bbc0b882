#include "etp/ad/adam.hpp"

#include <cmath>

namespace etp::ad {

void adam_step(std::span<Parameter> params, std::span<const Tensor> grads, AdamState& state,
               const AdamConfig& config) {
  if (grads.size() != params.size()) {
    throw ShapeError("adam_step: " + std::to_string(params.size()) + " parameters but " +
                     std::to_string(grads.size()) + " gradients");
  }
  if (state.m.empty() && state.v.empty()) {
    for (const auto& p : params) {
      state.m.push_back(Tensor::zeros_like(p.value));
      state.v.push_back(Tensor::zeros_like(p.value));
    }
  }
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw ShapeError("adam_step: optimizer state does not match the parameter list");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].shape() != params[i].value.shape() ||
        state.m[i].shape() != params[i].value.shape()) {
      throw ShapeError("adam_step: shape mismatch for '" + params[i].name + "': parameter " +
                       to_string(params[i].value.shape()) + ", gradient " +
                       to_string(grads[i].shape()));
    }
    if (!grads[i].all_finite()) throw NonFiniteGradient(params[i].name);
  }

  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(config.beta1, t);
  const double bc2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto w = params[i].value.data();
    auto g = grads[i].data();
    auto m = state.m[i].data();
    auto v = state.v[i].data();
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = config.beta1 * m[j] + (1.0 - config.beta1) * g[j];
      v[j] = config.beta2 * v[j] + (1.0 - config.beta2) * g[j] * g[j];
      const double m_hat = m[j] / bc1;
      const double v_hat = v[j] / bc2;
      w[j] -= config.lr * m_hat / (std::sqrt(v_hat) + config.eps);
    }
  }
}

}  // namespace etp::ad
