#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "etp/ad/adam.hpp"
#include "etp/data/dataset.hpp"
#include "etp/models/predictor.hpp"

namespace etp::models {

struct TrainConfig {
  std::size_t epochs = 400;
  std::size_t batch_size = 8;
  ad::AdamConfig adam;
};

/// Non-finite loss or gradient; carries where it happened.
class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(std::size_t epoch, std::size_t batch, const std::string& detail)
      : std::runtime_error("training diverged at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batch) + ": " + detail),
        epoch_(epoch),
        batch_(batch) {}
  std::size_t epoch() const { return epoch_; }
  std::size_t batch() const { return batch_; }

 private:
  std::size_t epoch_;
  std::size_t batch_;
};

struct TrainResult {
  std::vector<double> loss_trace;  // mean batch loss per epoch
};

/// Minibatch Adam on model.loss. Each batch: a context subset of
/// ceil(context_fraction * |batch|) rows is drawn without replacement, then
/// model.before_step runs (the ETP memory update), then one gradient step.
TrainResult train(Predictor& model, const data::LabeledDataset& train_set,
                  const TrainConfig& config, const dist::SeededRng& rng);

}  // namespace etp::models
