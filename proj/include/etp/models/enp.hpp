#pragma once

#include <span>

#include "etp/models/predictor.hpp"

namespace etp::models {

struct LatentAggregate {
  ad::Var mean;      // N x L, one row per target
  ad::Var variance;  // N x L, strictly positive
};

/// Evidential neural process. A context encoder h maps (x_j, onehot(y_j)) to
/// (mu_j, log sigma_j^2); the aggregate parameterizes Z, and the head maps
/// [Z, e(x)] to log-concentrations. Prediction uses Z ~ N(1, kappa2 I).
class EnpModel final : public Predictor {
 public:
  EnpModel(ModelConfig config, dist::SeededRng& rng);

  /// Batch-mean expected NLL under Dir(alpha(Z, e(x))), the optional pi-KL,
  /// and the latent KL to N(1, kappa2 I) divided by the batch size.
  ad::Var loss(ad::Tape& tape, const Bindings& b, const Batch& batch,
               dist::SeededRng& rng) override;
  ad::Tensor predict(const ad::Tensor& x, dist::SeededRng& rng) const override;

  /// Mean rule: averages of mu_j and sigma_j^2, repeated per target.
  /// Attention rule: per-target softmax over e(x) . mu_j / sqrt(L).
  LatentAggregate aggregate(const Bindings& b, ad::Var target_embedding, ad::Var context_x,
                            std::span<const int> context_y) const;
  ad::Var target_embedding(const Bindings& b, ad::Var x) const;
  ad::Var concentration(const Bindings& b, ad::Var z, ad::Var target_embedding) const;

  MlpSpec embed_spec() const;
  MlpSpec context_spec() const;
  MlpSpec head_spec() const;
};

}  // namespace etp::models
