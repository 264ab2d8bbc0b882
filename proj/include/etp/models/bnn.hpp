#pragma once

#include "etp/models/predictor.hpp"

namespace etp::models {

/// Mean-field Gaussian MLP with a softmax head and a N(0, 1/beta) prior.
class BnnModel final : public Predictor {
 public:
  BnnModel(ModelConfig config, dist::SeededRng& rng);

  /// Mean over train_w_samples weight draws of the batch-mean NLL, plus the
  /// weight KL divided by the dataset size.
  ad::Var loss(ad::Tape& tape, const Bindings& b, const Batch& batch,
               dist::SeededRng& rng) override;
  ad::Tensor predict(const ad::Tensor& x, dist::SeededRng& rng) const override;
  metrics::DecompositionTriple decompose(const ad::Tensor& x_row, std::size_t outer_draws,
                                         std::size_t inner_draws,
                                         dist::SeededRng& rng) const override;

  /// Logits for one weight draw; `rng` null selects the posterior means.
  ad::Var logits(const Bindings& b, ad::Var x, dist::SeededRng* rng) const;
  MlpSpec spec() const { return config_.encoder_spec(config_.num_classes); }
};

/// Batch-mean categorical NLL of softmax(logits); N x K logits.
ad::Var softmax_nll(ad::Var logits, std::span<const int> labels);

}  // namespace etp::models
