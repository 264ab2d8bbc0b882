#pragma once

#include <span>
#include <vector>

#include "etp/models/predictor.hpp"

namespace etp::models {

/// Per-row EDL objective (N x 1): sum_k (y_k - E[pi_k])^2 + Var[pi_k], plus
/// lambda * KL(Dir(alpha) || Dir(1, ..., 1)).
ad::Var edl_loss_rows(ad::Var alpha, std::span<const int> labels, double lambda);

/// Per-row negative ELBO of the latent model pi ~ Dir(1), y ~ N(pi, I/2)
/// under q(pi) = Dir(alpha), computed from raw second moments without the
/// tape. Matches edl_loss_rows with lambda = kl_weight up to the constant
/// (K/2) log(pi).
std::vector<double> edl_negative_elbo(const ad::Tensor& alpha, std::span<const int> labels,
                                      double kl_weight = 1.0);

/// Deterministic MLP whose exponentiated outputs are the concentrations.
class EdlModel final : public Predictor {
 public:
  EdlModel(ModelConfig config, dist::SeededRng& rng);

  ad::Var loss(ad::Tape& tape, const Bindings& b, const Batch& batch,
               dist::SeededRng& rng) override;
  ad::Tensor predict(const ad::Tensor& x, dist::SeededRng& rng) const override;

  ad::Var concentration(const Bindings& b, ad::Var x) const;
  /// Annealed KL weight min(1, epoch / lambda_anneal_epochs).
  double lambda_at(std::size_t epoch) const;
  MlpSpec spec() const { return config_.encoder_spec(config_.num_classes); }
};

}  // namespace etp::models
