#include "etp/models/train.hpp"

#include <cmath>

#include "etp/data/transforms.hpp"

namespace etp::models {

TrainResult train(Predictor& model, const data::LabeledDataset& train_set,
                  const TrainConfig& config, const dist::SeededRng& rng) {
  train_set.validate();
  if (train_set.size() == 0) throw std::invalid_argument("train: empty training set");
  if (train_set.dim != model.config().input_dim ||
      train_set.num_classes != model.config().num_classes) {
    throw std::invalid_argument("train: dataset shape does not match the model configuration");
  }
  TrainResult result;
  if (config.epochs == 0) return result;

  const data::BatchSchedule schedule(train_set.size(), config.batch_size, rng.derive(1));
  dist::SeededRng draws = rng.derive(2);
  ad::AdamState adam;
  const double fraction = model.config().context_fraction;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto batches = schedule.epoch(epoch);
    double total = 0.0;
    for (std::size_t bi = 0; bi < batches.size(); ++bi) {
      const auto& idx = batches[bi];
      Batch batch;
      batch.x = train_set.feature_tensor(idx);
      batch.y = train_set.labels_at(idx);
      batch.dataset_size = train_set.size();
      batch.epoch = epoch;
      batch.index = bi;

      const auto c = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(idx.size())));
      const std::vector<std::size_t> perm = dist::permutation(idx.size(), draws);
      std::vector<std::size_t> context(c);
      for (std::size_t j = 0; j < c; ++j) context[j] = idx[perm[j]];
      batch.context_x = train_set.feature_tensor(context);
      batch.context_y = train_set.labels_at(context);

      model.before_step(batch, draws);

      ad::Tape tape;
      const Bindings b = model.parameters().bind(tape);
      ad::Var loss = model.loss(tape, b, batch, draws);
      const double value = loss.value().item();
      if (!std::isfinite(value)) throw TrainingDiverged(epoch, bi, "non-finite loss");
      const auto grads = model.parameters().gradients(tape.backward(loss), b);
      try {
        ad::adam_step(model.parameters().params(), grads, adam, config.adam);
      } catch (const ad::NonFiniteGradient& e) {
        throw TrainingDiverged(epoch, bi, e.what());
      }
      total += value;
    }
    result.loss_trace.push_back(total / static_cast<double>(batches.size()));
  }
  return result;
}

}  // namespace etp::models
