#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "etp/ad/tape.hpp"
#include "etp/dist/rng.hpp"
#include "etp/models/parameters.hpp"

namespace etp::models {

enum class Activation { relu, tanh };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);

struct MlpSpec {
  std::size_t input_dim = 1;
  std::vector<std::size_t> hidden;
  std::size_t output_dim = 2;
  Activation activation = Activation::relu;

  /// Number of affine layers (hidden layers + output layer).
  std::size_t num_layers() const { return hidden.size() + 1; }
  std::size_t fan_in(std::size_t layer) const;
  std::size_t fan_out(std::size_t layer) const;
  void validate() const;
};

/// Deterministic MLP: parameters "<prefix>.W<l>" (fan_in x fan_out) and
/// "<prefix>.b<l>" (1 x fan_out), uniform in +-1/sqrt(fan_in).
void add_mlp_parameters(ParameterStore& store, const std::string& prefix, const MlpSpec& spec,
                        dist::SeededRng& rng);
ad::Var mlp_forward(const MlpSpec& spec, const Bindings& b, const std::string& prefix, ad::Var x);

/// Mean-field Gaussian MLP: every weight and bias has "<name>.mu" and
/// "<name>.logvar". Means use the deterministic initialization; log-variances
/// start at `init_logvar`.
void add_variational_mlp_parameters(ParameterStore& store, const std::string& prefix,
                                    const MlpSpec& spec, double init_logvar,
                                    dist::SeededRng& rng);

/// With `rng` null the forward pass uses the posterior means; otherwise one
/// weight draw is taken by reparameterization.
ad::Var variational_mlp_forward(const MlpSpec& spec, const Bindings& b, const std::string& prefix,
                                ad::Var x, dist::SeededRng* rng);

/// Sum over all weights of KL(q || N(0, 1/beta)).
ad::Var variational_mlp_kl(const MlpSpec& spec, const Bindings& b, const std::string& prefix,
                           double beta);

}  // namespace etp::models
