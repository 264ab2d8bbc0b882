#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "etp/data/transforms.hpp"
#include "etp/models/predictor.hpp"
#include "etp/models/train.hpp"

namespace etp::harness {

/// Invalid configuration; the message starts with the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& key, const std::string& message)
      : std::runtime_error(key + ": " + message), key_(key) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

/// Missing or malformed input data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Task { two_gaussians, iris2d, fmnist_vs_mnist };
enum class OodScore { entropy, max_prob };

std::string_view to_string(Task t);
std::string_view to_string(OodScore s);

struct ExperimentConfig {
  Task task = Task::two_gaussians;
  models::ModelConfig model;
  /// Empty means the task default: [32] for two-gaussians, [32, 32] for
  /// iris2d, [128] for fmnist-vs-mnist.
  std::optional<std::vector<std::size_t>> hidden;
  models::TrainConfig train;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};

  std::size_t ece_bins = 10;
  OodScore ood_score = OodScore::entropy;
  std::string data_dir = "data";
  std::size_t workers = 1;
  bool timing = false;

  std::size_t train_per_class = 20;
  std::size_t test_size = 10000;
  std::size_t ood_size = 1000;
  double ood_inner = 6.0;
  double ood_outer = 10.0;
  double iris_test_fraction = 0.2;
  std::size_t fmnist_train = 5000;
  std::size_t fmnist_test = 5000;
  std::size_t mnist_ood = 5000;

  std::optional<data::CorruptionSpec> corruption;

  std::size_t decomp_outer = 2000;
  std::size_t decomp_inner = 16;
  std::vector<double> probes;  // flattened rows; empty picks test points
  std::size_t probe_count = 5;

  /// Fills task-dependent fields (input dimension, classes, hidden widths)
  /// and checks cross-field constraints.
  void resolve();
};

/// Flat `key = value` lines; `#` starts a comment. Later layers override
/// earlier ones; each layer is applied key by key.
using ConfigLayer = std::map<std::string, std::string>;

ConfigLayer parse_config_text(const std::string& text, const std::string& origin = "config");
ConfigLayer read_config_file(const std::string& path);

/// defaults < each layer in order; the result is resolved and validated.
ExperimentConfig build_config(const std::vector<ConfigLayer>& layers);

/// Applies one key; throws ConfigError on unknown keys, type errors and
/// out-of-range values.
void apply_key(ExperimentConfig& cfg, const std::string& key, const std::string& value);

/// Every key with its resolved value.
nlohmann::json config_to_json(const ExperimentConfig& cfg);
/// Documented keys in file order.
std::vector<std::string> config_keys();

}  // namespace etp::harness
