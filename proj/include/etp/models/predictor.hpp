#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "etp/ad/tape.hpp"
#include "etp/dist/rng.hpp"
#include "etp/metrics/decomposition.hpp"
#include "etp/models/mlp.hpp"
#include "etp/models/parameters.hpp"

namespace etp::models {

enum class ModelKind { bnn, edl, enp, etp };
enum class Combiner { residual, direct };
enum class KeyNetwork { identity, mlp };
enum class Aggregation { mean, attention };

std::string_view to_string(ModelKind k);
std::string_view to_string(Combiner c);
std::string_view to_string(KeyNetwork k);
std::string_view to_string(Aggregation a);
ModelKind parse_model_kind(std::string_view s);
Combiner parse_combiner(std::string_view s);
KeyNetwork parse_key_network(std::string_view s);
Aggregation parse_aggregation(std::string_view s);

/// Concentrations are clamped at this value before use.
inline constexpr double kMaxConcentration = 1e6;

/// Architecture and hyperparameters shared by the four predictors. Fields a
/// model does not use are ignored by it.
struct ModelConfig {
  ModelKind kind = ModelKind::etp;
  std::size_t input_dim = 1;
  std::size_t num_classes = 2;
  std::vector<std::size_t> hidden{32};
  Activation activation = Activation::relu;

  double beta = 1.0;          // prior precision of variational weights
  double init_logvar = -6.0;  // initial log-variance of variational weights
  std::size_t train_w_samples = 1;
  std::size_t train_z_samples = 1;
  std::size_t predict_w_samples = 16;
  std::size_t predict_z_samples = 8;
  double pi_kl_weight = 0.0;  // EDL-style KL(q(pi) || Dir(1)) added to ETP/ENP

  // ETP
  std::size_t memory_cells = 16;
  double gamma = 0.9;
  double kappa2 = 0.1;  // also the ENP prediction-time spread
  std::size_t memory_samples = 8;
  double context_fraction = 0.25;
  Combiner combiner = Combiner::residual;
  KeyNetwork key_network = KeyNetwork::mlp;
  std::vector<std::size_t> key_hidden{32};
  bool memory_tanh = true;
  double memory_init_scale = 0.1;

  // EDL
  double lambda_anneal_epochs = 10.0;  // lambda_t = min(1, epoch / this); 0 disables annealing

  // ENP
  std::size_t latent_dim = 8;
  Aggregation aggregation = Aggregation::mean;

  void validate() const;
  MlpSpec encoder_spec(std::size_t output_dim) const;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

/// One optimization step's worth of data. The context rows are a subset of
/// the batch chosen by the trainer; only ETP and ENP read them.
struct Batch {
  ad::Tensor x;
  std::vector<int> y;
  ad::Tensor context_x;
  std::vector<int> context_y;
  std::size_t dataset_size = 0;
  std::size_t epoch = 0;
  std::size_t index = 0;
};

/// Common interface of BNN, EDL, ENP and ETP.
class Predictor {
 public:
  explicit Predictor(ModelConfig config) : config_(std::move(config)) {}
  virtual ~Predictor() = default;
  Predictor(const Predictor&) = delete;
  Predictor& operator=(const Predictor&) = delete;

  ModelKind kind() const { return config_.kind; }
  const ModelConfig& config() const { return config_; }
  ParameterStore& parameters() { return params_; }
  const ParameterStore& parameters() const { return params_; }

  /// Scalar training objective recorded on `tape` against `b`.
  virtual ad::Var loss(ad::Tape& tape, const Bindings& b, const Batch& batch,
                       dist::SeededRng& rng) = 0;
  /// Runs before the gradient step of every batch, outside the tape.
  virtual void before_step(const Batch& /*batch*/, dist::SeededRng& /*rng*/) {}

  /// Posterior predictive class probabilities, one row per input (N x K).
  virtual ad::Tensor predict(const ad::Tensor& x, dist::SeededRng& rng) const = 0;

  /// Predictive-variance decomposition for one input row.
  virtual metrics::DecompositionTriple decompose(const ad::Tensor& x_row, std::size_t outer_draws,
                                                 std::size_t inner_draws,
                                                 dist::SeededRng& rng) const;

  /// Non-parameter state that checkpoints must carry (the ETP memory).
  virtual std::vector<ad::Parameter> state() const { return {}; }
  virtual void restore_state(const std::string& name, ad::Tensor value);

  /// Concentrations that hit kMaxConcentration since construction.
  std::size_t clamp_events() const { return clamp_events_.load(); }

 protected:
  /// exp(min(log_alpha, log kMaxConcentration)), counting clamped entries.
  ad::Var clamped_exp(ad::Var log_alpha) const;

  ModelConfig config_;
  ParameterStore params_;
  mutable std::atomic<std::size_t> clamp_events_{0};
};

/// Builds an untrained predictor with freshly initialized parameters.
std::unique_ptr<Predictor> make_predictor(const ModelConfig& config, dist::SeededRng& rng);

/// Class-probability rows of an N x K concentration matrix.
ad::Tensor dirichlet_means(const ad::Tensor& alpha);
/// Constant N x K one-hot matrix.
ad::Tensor one_hot(std::span<const int> labels, std::size_t num_classes);

}  // namespace etp::models
