#pragma once

#include <functional>
#include <span>

#include "etp/models/predictor.hpp"

namespace etp::models {

struct AttentionRead {
  ad::Var weights;  // N x R, rows on the simplex
  ad::Var read;     // N x K, weights * cells
};

/// phi = softmax_r(keys_r . v / sqrt(K)), a = sum_r phi_r z_r. `keys` holds
/// k_psi applied to each cell of `cells`.
AttentionRead etp_attend(ad::Var embedding, ad::Var cells, ad::Var keys);

/// log alpha: v + tanh(a) in residual mode, a in direct mode.
ad::Var etp_log_concentration(ad::Var embedding, ad::Var read, Combiner mode);

struct MemoryUpdateConfig {
  double gamma = 0.9;
  double kappa2 = 0.1;  // zero gives the deterministic limit
  std::size_t samples = 8;
  bool apply_tanh = true;
};

using KeyFunction = std::function<ad::Tensor(const ad::Tensor&)>;

/// One application of the memory rule. For every sample Z = M + kappa * eps,
/// each cell moves to gamma m_r + (1 - gamma) sum_j phi_jr [onehot(y_j) +
/// softmax(v_j)]; the new cell is the sample mean of tanh of that (or of the
/// raw value with apply_tanh off). Pure values; nothing touches a tape.
ad::Tensor etp_memory_update(const ad::Tensor& memory, const ad::Tensor& context_embeddings,
                             std::span<const int> context_labels, const KeyFunction& keys,
                             const MemoryUpdateConfig& config, dist::SeededRng& rng);

/// Evidential Turing Process: variational encoder v_w, key network k_psi and
/// an R x K external memory updated by etp_memory_update.
class EtpModel final : public Predictor {
 public:
  EtpModel(ModelConfig config, dist::SeededRng& rng);

  ad::Var loss(ad::Tape& tape, const Bindings& b, const Batch& batch,
               dist::SeededRng& rng) override;
  void before_step(const Batch& batch, dist::SeededRng& rng) override;
  ad::Tensor predict(const ad::Tensor& x, dist::SeededRng& rng) const override;
  metrics::DecompositionTriple decompose(const ad::Tensor& x_row, std::size_t outer_draws,
                                         std::size_t inner_draws,
                                         dist::SeededRng& rng) const override;
  std::vector<ad::Parameter> state() const override { return {{"memory", memory_}}; }
  void restore_state(const std::string& name, ad::Tensor value) override;

  /// Monte-Carlo free energy over w_samples encoder draws and z_samples
  /// memory draws: batch-mean expected NLL, the optional pi-KL, and the
  /// weight KL divided by the dataset size.
  ad::Var free_energy(ad::Tape& tape, const Bindings& b, const Batch& batch,
                      std::size_t w_samples, std::size_t z_samples, dist::SeededRng& rng) const;

  /// Concentrations for one draw. `w_rng` null uses the posterior means.
  ad::Var concentration(const Bindings& b, ad::Var x, const ad::Tensor& z,
                        dist::SeededRng* w_rng) const;
  ad::Var embedding(const Bindings& b, ad::Var x, dist::SeededRng* w_rng) const;
  ad::Var keys(const Bindings& b, ad::Var cells) const;

  /// One memory draw Z = M + kappa * eps.
  ad::Tensor sample_memory(dist::SeededRng& rng) const;

  /// tanh(a(v(x); Z)) averaged over `samples` memory draws at the posterior
  /// mean encoder (N x K).
  ad::Tensor memory_evidence(const ad::Tensor& x, std::size_t samples,
                             dist::SeededRng& rng) const;

  const ad::Tensor& memory() const { return memory_; }
  void set_memory(ad::Tensor m);
  MlpSpec encoder() const { return config_.encoder_spec(config_.num_classes); }
  MlpSpec key_spec() const;

 private:
  ad::Tensor memory_;
};

}  // namespace etp::models
