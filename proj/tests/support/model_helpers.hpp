#pragma once

// Shared fixtures for model tests: the 1-D two-class task, configs per kind
// and a finite-difference check of a model loss with every draw frozen.

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "etp/data/synthetic.hpp"
#include "etp/models/predictor.hpp"

namespace etp::testing {

inline models::ModelConfig small_config(models::ModelKind kind, std::size_t input_dim = 1,
                                        std::size_t classes = 2) {
  models::ModelConfig c;
  c.kind = kind;
  c.input_dim = input_dim;
  c.num_classes = classes;
  c.hidden = {8};
  c.key_hidden = {4};
  c.memory_cells = 4;
  c.latent_dim = 3;
  c.predict_w_samples = 4;
  c.predict_z_samples = 3;
  return c;
}

/// The simplified ETP variant used on the 1-D task: identity keys, residual
/// combiner, no tanh in the memory rule.
inline models::ModelConfig simplified_etp_config() {
  models::ModelConfig c;
  c.kind = models::ModelKind::etp;
  c.key_network = models::KeyNetwork::identity;
  c.combiner = models::Combiner::residual;
  c.memory_tanh = false;
  return c;
}

inline models::Batch batch_from(const data::LabeledDataset& ds, std::size_t context) {
  models::Batch b;
  std::vector<std::size_t> all(ds.size()), ctx(std::min(context, ds.size()));
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  for (std::size_t i = 0; i < ctx.size(); ++i) ctx[i] = i;
  b.x = ds.feature_tensor(all);
  b.y = ds.labels_at(all);
  b.context_x = ds.feature_tensor(ctx);
  b.context_y = ds.labels_at(ctx);
  b.dataset_size = ds.size() * 5;
  return b;
}

inline double model_loss(models::Predictor& m, const models::Batch& batch, std::uint64_t seed) {
  ad::Tape tape;
  const auto b = m.parameters().bind(tape);
  dist::SeededRng rng(seed);
  return m.loss(tape, b, batch, rng).value().item();
}

/// Max relative error between tape gradients and central differences of the
/// loss in every parameter entry; the loss RNG restarts from `seed` on every
/// evaluation, so all draws are frozen.
inline double model_fd_relative_error(models::Predictor& m, const models::Batch& batch,
                                      std::uint64_t seed, double h = 1e-6, double floor = 1e-6) {
  std::vector<ad::Tensor> analytic;
  {
    ad::Tape tape;
    const auto b = m.parameters().bind(tape);
    dist::SeededRng rng(seed);
    const auto loss = m.loss(tape, b, batch, rng);
    analytic = m.parameters().gradients(tape.backward(loss), b);
  }
  double worst = 0.0;
  auto params = m.parameters().params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (std::size_t j = 0; j < params[i].value.size(); ++j) {
      const double x0 = params[i].value[j];
      params[i].value[j] = x0 + h;
      const double up = model_loss(m, batch, seed);
      params[i].value[j] = x0 - h;
      const double down = model_loss(m, batch, seed);
      params[i].value[j] = x0;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[i][j];
      worst = std::max(worst, std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor}));
    }
  }
  return worst;
}

}  // namespace etp::testing
