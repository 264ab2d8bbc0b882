#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "etp/data/dataset.hpp"
#include "etp/harness/config.hpp"
#include "etp/metrics/decomposition.hpp"
#include "etp/models/predictor.hpp"

namespace etp::harness {

struct TaskData {
  data::LabeledDataset train;
  data::LabeledDataset test;
  data::LabeledDataset ood;
};

/// Builds the train/test/OOD sets of a task for one seed. Real tasks read
/// IDX files under cfg.data_dir and throw DataError when they are missing.
TaskData build_task_data(const ExperimentConfig& cfg, std::uint64_t seed);

struct SeedMetrics {
  double err_pct = 0.0;
  double ece_pct = 0.0;
  double nll = 0.0;
  double auroc_ood_pct = 0.0;
};

struct SeedResult {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;  // set when !ok
  SeedMetrics metrics;
  std::vector<double> loss_trace;
  std::optional<double> runtime_s_per_epoch;
};

struct DecompositionRow {
  std::vector<double> probe;
  metrics::DecompositionTriple triple;
};

struct CalibrationReport {
  nlohmann::json config;
  std::vector<SeedResult> seeds;
  std::vector<DecompositionRow> decomposition;
};

struct TrainedSeed {
  SeedResult result;  // metrics unset
  std::unique_ptr<models::Predictor> model;
  TaskData data;
};

/// Data and training for one seed. Divergence is recorded in the result
/// (model left at its last good parameters), not thrown.
TrainedSeed train_seed(const ExperimentConfig& cfg, std::uint64_t seed);

/// Error, ECE and NLL on the in-domain test split; AUROC of the OOD score
/// with the out-of-domain set as the positive class.
SeedMetrics evaluate(const models::Predictor& model, const TaskData& data,
                     const ExperimentConfig& cfg, std::uint64_t seed);

SeedResult run_seed(const ExperimentConfig& cfg, std::uint64_t seed);

/// All seeds, cfg.workers at a time; results are in seed-list order.
CalibrationReport run_experiment(const ExperimentConfig& cfg);

/// One row per probe (rows of `probes`). Only BNN and ETP define the split;
/// other kinds are rejected with ConfigError.
std::vector<DecompositionRow> run_decomposition(const ExperimentConfig& cfg,
                                                const models::Predictor& model,
                                                const ad::Tensor& probes, std::uint64_t seed);

/// cfg.probes when given, otherwise the first cfg.probe_count test inputs.
ad::Tensor probe_inputs(const ExperimentConfig& cfg, const TaskData& data);

}  // namespace etp::harness
