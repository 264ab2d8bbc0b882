#include "etp/models/predictor.hpp"

#include <cmath>
#include <stdexcept>

#include "etp/models/bnn.hpp"
#include "etp/models/edl.hpp"
#include "etp/models/enp.hpp"
#include "etp/models/etp.hpp"

namespace etp::models {

namespace {

template <typename Enum, std::size_t N>
Enum parse_enum(std::string_view s, const std::pair<Enum, std::string_view> (&table)[N],
                const char* what) {
  for (const auto& [value, name] : table) {
    if (name == s) return value;
  }
  throw std::invalid_argument(std::string("unknown ") + what + " '" + std::string(s) + "'");
}

template <typename Enum, std::size_t N>
std::string_view name_of(Enum e, const std::pair<Enum, std::string_view> (&table)[N]) {
  for (const auto& [value, name] : table) {
    if (value == e) return name;
  }
  return "unknown";
}

constexpr std::pair<ModelKind, std::string_view> kKinds[] = {
    {ModelKind::bnn, "bnn"}, {ModelKind::edl, "edl"}, {ModelKind::enp, "enp"},
    {ModelKind::etp, "etp"}};
constexpr std::pair<Combiner, std::string_view> kCombiners[] = {
    {Combiner::residual, "residual"}, {Combiner::direct, "direct"}};
constexpr std::pair<KeyNetwork, std::string_view> kKeys[] = {
    {KeyNetwork::identity, "identity"}, {KeyNetwork::mlp, "mlp"}};
constexpr std::pair<Aggregation, std::string_view> kAggregations[] = {
    {Aggregation::mean, "mean"}, {Aggregation::attention, "attention"}};

}  // namespace

std::string_view to_string(ModelKind k) { return name_of(k, kKinds); }
std::string_view to_string(Combiner c) { return name_of(c, kCombiners); }
std::string_view to_string(KeyNetwork k) { return name_of(k, kKeys); }
std::string_view to_string(Aggregation a) { return name_of(a, kAggregations); }
ModelKind parse_model_kind(std::string_view s) { return parse_enum(s, kKinds, "model kind"); }
Combiner parse_combiner(std::string_view s) { return parse_enum(s, kCombiners, "combiner"); }
KeyNetwork parse_key_network(std::string_view s) { return parse_enum(s, kKeys, "key network"); }
Aggregation parse_aggregation(std::string_view s) {
  return parse_enum(s, kAggregations, "aggregation");
}

void ModelConfig::validate() const {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
  };
  require(input_dim >= 1, "input_dim must be >= 1");
  require(num_classes >= 2, "num_classes must be >= 2");
  for (std::size_t w : hidden) require(w >= 1, "hidden widths must be >= 1");
  for (std::size_t w : key_hidden) require(w >= 1, "key_hidden widths must be >= 1");
  require(beta > 0.0 && std::isfinite(beta), "beta must be > 0");
  require(std::isfinite(init_logvar), "init_logvar must be finite");
  require(train_w_samples >= 1 && train_z_samples >= 1, "training sample counts must be >= 1");
  require(predict_w_samples >= 1 && predict_z_samples >= 1,
          "prediction sample counts must be >= 1");
  require(pi_kl_weight >= 0.0, "pi_kl_weight must be >= 0");
  require(memory_cells >= 1, "memory_cells must be >= 1");
  require(gamma > 0.0 && gamma < 1.0, "gamma must be in (0, 1)");
  require(kappa2 > 0.0 && std::isfinite(kappa2), "kappa2 must be > 0");
  require(memory_samples >= 1, "memory_samples must be >= 1");
  require(context_fraction > 0.0 && context_fraction <= 1.0, "context_fraction must be in (0, 1]");
  require(memory_init_scale >= 0.0 && memory_init_scale < 1.0,
          "memory_init_scale must be in [0, 1)");
  require(lambda_anneal_epochs >= 0.0, "lambda_anneal_epochs must be >= 0");
  require(latent_dim >= 1, "latent_dim must be >= 1");
}

MlpSpec ModelConfig::encoder_spec(std::size_t output_dim) const {
  MlpSpec s;
  s.input_dim = input_dim;
  s.hidden = hidden;
  s.output_dim = output_dim;
  s.activation = activation;
  return s;
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"kind", to_string(c.kind)},
                     {"input_dim", c.input_dim},
                     {"num_classes", c.num_classes},
                     {"hidden", c.hidden},
                     {"activation", to_string(c.activation)},
                     {"beta", c.beta},
                     {"init_logvar", c.init_logvar},
                     {"train_w_samples", c.train_w_samples},
                     {"train_z_samples", c.train_z_samples},
                     {"predict_w_samples", c.predict_w_samples},
                     {"predict_z_samples", c.predict_z_samples},
                     {"pi_kl_weight", c.pi_kl_weight},
                     {"memory_cells", c.memory_cells},
                     {"gamma", c.gamma},
                     {"kappa2", c.kappa2},
                     {"memory_samples", c.memory_samples},
                     {"context_fraction", c.context_fraction},
                     {"combiner", to_string(c.combiner)},
                     {"key_network", to_string(c.key_network)},
                     {"key_hidden", c.key_hidden},
                     {"memory_tanh", c.memory_tanh},
                     {"memory_init_scale", c.memory_init_scale},
                     {"lambda_anneal_epochs", c.lambda_anneal_epochs},
                     {"latent_dim", c.latent_dim},
                     {"aggregation", to_string(c.aggregation)}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  c.kind = parse_model_kind(j.at("kind").get<std::string>());
  j.at("input_dim").get_to(c.input_dim);
  j.at("num_classes").get_to(c.num_classes);
  j.at("hidden").get_to(c.hidden);
  c.activation = parse_activation(j.at("activation").get<std::string>());
  j.at("beta").get_to(c.beta);
  j.at("init_logvar").get_to(c.init_logvar);
  j.at("train_w_samples").get_to(c.train_w_samples);
  j.at("train_z_samples").get_to(c.train_z_samples);
  j.at("predict_w_samples").get_to(c.predict_w_samples);
  j.at("predict_z_samples").get_to(c.predict_z_samples);
  j.at("pi_kl_weight").get_to(c.pi_kl_weight);
  j.at("memory_cells").get_to(c.memory_cells);
  j.at("gamma").get_to(c.gamma);
  j.at("kappa2").get_to(c.kappa2);
  j.at("memory_samples").get_to(c.memory_samples);
  j.at("context_fraction").get_to(c.context_fraction);
  c.combiner = parse_combiner(j.at("combiner").get<std::string>());
  c.key_network = parse_key_network(j.at("key_network").get<std::string>());
  j.at("key_hidden").get_to(c.key_hidden);
  j.at("memory_tanh").get_to(c.memory_tanh);
  j.at("memory_init_scale").get_to(c.memory_init_scale);
  j.at("lambda_anneal_epochs").get_to(c.lambda_anneal_epochs);
  j.at("latent_dim").get_to(c.latent_dim);
  c.aggregation = parse_aggregation(j.at("aggregation").get<std::string>());
}

metrics::DecompositionTriple Predictor::decompose(const ad::Tensor&, std::size_t, std::size_t,
                                                  dist::SeededRng&) const {
  throw std::invalid_argument(
      "model kind '" + std::string(to_string(kind())) +
      "' has no variance decomposition: it has no global random parameters to separate "
      "reducible from irreducible uncertainty (use bnn or etp)");
}

void Predictor::restore_state(const std::string& name, ad::Tensor) {
  throw std::invalid_argument("model kind '" + std::string(to_string(kind())) +
                              "' has no state tensor '" + name + "'");
}

ad::Var Predictor::clamped_exp(ad::Var log_alpha) const {
  static const double ceiling = std::log(kMaxConcentration);
  std::size_t hits = 0;
  for (double v : log_alpha.value().data()) {
    if (v > ceiling) ++hits;
  }
  if (hits > 0) clamp_events_ += hits;
  return ad::exp(ad::clamp_max(log_alpha, ceiling));
}

std::unique_ptr<Predictor> make_predictor(const ModelConfig& config, dist::SeededRng& rng) {
  config.validate();
  switch (config.kind) {
    case ModelKind::bnn:
      return std::make_unique<BnnModel>(config, rng);
    case ModelKind::edl:
      return std::make_unique<EdlModel>(config, rng);
    case ModelKind::enp:
      return std::make_unique<EnpModel>(config, rng);
    case ModelKind::etp:
      return std::make_unique<EtpModel>(config, rng);
  }
  throw std::invalid_argument("unknown model kind");
}

ad::Tensor dirichlet_means(const ad::Tensor& alpha) {
  ad::Tensor out = alpha;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    double a0 = 0.0;
    for (std::size_t k = 0; k < out.cols(); ++k) a0 += alpha(i, k);
    if (!(a0 > 0.0)) throw std::domain_error("dirichlet_means: non-positive concentration");
    for (std::size_t k = 0; k < out.cols(); ++k) out(i, k) = alpha(i, k) / a0;
  }
  return out;
}

ad::Tensor one_hot(std::span<const int> labels, std::size_t num_classes) {
  ad::Tensor out({labels.size(), num_classes});
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes) {
      throw std::out_of_range("label " + std::to_string(labels[i]) + " outside [0, " +
                              std::to_string(num_classes) + ")");
    }
    out(i, static_cast<std::size_t>(labels[i])) = 1.0;
  }
  return out;
}

}  // namespace etp::models
