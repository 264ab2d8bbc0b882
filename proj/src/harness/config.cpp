#include "etp/harness/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

namespace etp::harness {

std::string_view to_string(Task t) {
  switch (t) {
    case Task::two_gaussians:
      return "two-gaussians";
    case Task::iris2d:
      return "iris2d";
    case Task::fmnist_vs_mnist:
      return "fmnist-vs-mnist";
  }
  return "unknown";
}

std::string_view to_string(OodScore s) { return s == OodScore::entropy ? "entropy" : "max-prob"; }

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(trim(item));
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    throw ConfigError(key, "expected a number, got '" + v + "'");
  }
  if (used != v.size() || !std::isfinite(x)) {
    throw ConfigError(key, "expected a finite number, got '" + v + "'");
  }
  return x;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) {
    throw ConfigError(key, "expected a non-negative integer, got '" + v + "'");
  }
  try {
    return std::stoull(v);
  } catch (const std::exception&) {
    throw ConfigError(key, "integer out of range: '" + v + "'");
  }
}

std::size_t to_size(const std::string& key, const std::string& v, std::size_t min) {
  const auto x = to_u64(key, v);
  if (x < min) throw ConfigError(key, "must be >= " + std::to_string(min));
  return static_cast<std::size_t>(x);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key, "expected true or false, got '" + v + "'");
}

std::vector<std::size_t> to_widths(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  if (trim(v).empty()) return out;
  for (const auto& item : split_list(v)) out.push_back(to_size(key, item, 1));
  return out;
}

double in_range(const std::string& key, double x, double lo, double hi, bool lo_open,
                bool hi_open) {
  const bool ok = (lo_open ? x > lo : x >= lo) && (hi_open ? x < hi : x <= hi);
  if (!ok) {
    std::ostringstream msg;
    msg << "must be in " << (lo_open ? "(" : "[") << lo << ", " << hi << (hi_open ? ")" : "]")
        << ", got " << x;
    throw ConfigError(key, msg.str());
  }
  return x;
}

double positive(const std::string& key, const std::string& v) {
  const double x = to_double(key, v);
  if (!(x > 0.0)) throw ConfigError(key, "must be > 0, got " + v);
  return x;
}

template <typename F>
auto wrap(const std::string& key, F&& parse) {
  try {
    return parse();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(key, e.what());
  }
}

struct KeySpec {
  std::string name;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<nlohmann::json(const ExperimentConfig&)> get;
};

const std::vector<KeySpec>& key_table() {
  using C = ExperimentConfig;
  using J = nlohmann::json;
  static const std::vector<KeySpec> table = {
      {"task",
       [](C& c, const std::string& v) {
         if (v == "two-gaussians") c.task = Task::two_gaussians;
         else if (v == "iris2d") c.task = Task::iris2d;
         else if (v == "fmnist-vs-mnist") c.task = Task::fmnist_vs_mnist;
         else throw ConfigError("task", "expected two-gaussians, iris2d or fmnist-vs-mnist, got '" + v + "'");
       },
       [](const C& c) { return J(to_string(c.task)); }},
      {"model",
       [](C& c, const std::string& v) {
         c.model.kind = wrap("model", [&] { return models::parse_model_kind(v); });
       },
       [](const C& c) { return J(models::to_string(c.model.kind)); }},
      {"seeds",
       [](C& c, const std::string& v) {
         std::vector<std::uint64_t> s;
         for (const auto& item : split_list(v)) s.push_back(to_u64("seeds", item));
         if (s.empty()) throw ConfigError("seeds", "need at least one seed");
         c.seeds = s;
       },
       [](const C& c) { return J(c.seeds); }},
      {"epochs", [](C& c, const std::string& v) { c.train.epochs = to_size("epochs", v, 0); },
       [](const C& c) { return J(c.train.epochs); }},
      {"batch_size",
       [](C& c, const std::string& v) { c.train.batch_size = to_size("batch_size", v, 1); },
       [](const C& c) { return J(c.train.batch_size); }},
      {"lr", [](C& c, const std::string& v) { c.train.adam.lr = positive("lr", v); },
       [](const C& c) { return J(c.train.adam.lr); }},
      {"adam_beta1",
       [](C& c, const std::string& v) {
         c.train.adam.beta1 = in_range("adam_beta1", to_double("adam_beta1", v), 0, 1, false, true);
       },
       [](const C& c) { return J(c.train.adam.beta1); }},
      {"adam_beta2",
       [](C& c, const std::string& v) {
         c.train.adam.beta2 = in_range("adam_beta2", to_double("adam_beta2", v), 0, 1, false, true);
       },
       [](const C& c) { return J(c.train.adam.beta2); }},
      {"adam_eps", [](C& c, const std::string& v) { c.train.adam.eps = positive("adam_eps", v); },
       [](const C& c) { return J(c.train.adam.eps); }},
      {"hidden",
       [](C& c, const std::string& v) {
         if (v == "auto") c.hidden.reset();
         else c.hidden = to_widths("hidden", v);
       },
       [](const C& c) { return J(c.model.hidden); }},
      {"activation",
       [](C& c, const std::string& v) {
         c.model.activation = wrap("activation", [&] { return models::parse_activation(v); });
       },
       [](const C& c) { return J(models::to_string(c.model.activation)); }},
      {"beta", [](C& c, const std::string& v) { c.model.beta = positive("beta", v); },
       [](const C& c) { return J(c.model.beta); }},
      {"init_logvar",
       [](C& c, const std::string& v) { c.model.init_logvar = to_double("init_logvar", v); },
       [](const C& c) { return J(c.model.init_logvar); }},
      {"train_w_samples",
       [](C& c, const std::string& v) { c.model.train_w_samples = to_size("train_w_samples", v, 1); },
       [](const C& c) { return J(c.model.train_w_samples); }},
      {"train_z_samples",
       [](C& c, const std::string& v) { c.model.train_z_samples = to_size("train_z_samples", v, 1); },
       [](const C& c) { return J(c.model.train_z_samples); }},
      {"predict_w_samples",
       [](C& c, const std::string& v) {
         c.model.predict_w_samples = to_size("predict_w_samples", v, 1);
       },
       [](const C& c) { return J(c.model.predict_w_samples); }},
      {"predict_z_samples",
       [](C& c, const std::string& v) {
         c.model.predict_z_samples = to_size("predict_z_samples", v, 1);
       },
       [](const C& c) { return J(c.model.predict_z_samples); }},
      {"pi_kl_weight",
       [](C& c, const std::string& v) {
         const double x = to_double("pi_kl_weight", v);
         if (x < 0.0) throw ConfigError("pi_kl_weight", "must be >= 0");
         c.model.pi_kl_weight = x;
       },
       [](const C& c) { return J(c.model.pi_kl_weight); }},
      {"memory_cells",
       [](C& c, const std::string& v) { c.model.memory_cells = to_size("memory_cells", v, 1); },
       [](const C& c) { return J(c.model.memory_cells); }},
      {"gamma",
       [](C& c, const std::string& v) {
         c.model.gamma = in_range("gamma", to_double("gamma", v), 0, 1, true, true);
       },
       [](const C& c) { return J(c.model.gamma); }},
      {"kappa2", [](C& c, const std::string& v) { c.model.kappa2 = positive("kappa2", v); },
       [](const C& c) { return J(c.model.kappa2); }},
      {"memory_samples",
       [](C& c, const std::string& v) { c.model.memory_samples = to_size("memory_samples", v, 1); },
       [](const C& c) { return J(c.model.memory_samples); }},
      {"context_fraction",
       [](C& c, const std::string& v) {
         c.model.context_fraction =
             in_range("context_fraction", to_double("context_fraction", v), 0, 1, true, false);
       },
       [](const C& c) { return J(c.model.context_fraction); }},
      {"combiner",
       [](C& c, const std::string& v) {
         c.model.combiner = wrap("combiner", [&] { return models::parse_combiner(v); });
       },
       [](const C& c) { return J(models::to_string(c.model.combiner)); }},
      {"key_network",
       [](C& c, const std::string& v) {
         c.model.key_network = wrap("key_network", [&] { return models::parse_key_network(v); });
       },
       [](const C& c) { return J(models::to_string(c.model.key_network)); }},
      {"key_hidden",
       [](C& c, const std::string& v) { c.model.key_hidden = to_widths("key_hidden", v); },
       [](const C& c) { return J(c.model.key_hidden); }},
      {"memory_tanh",
       [](C& c, const std::string& v) { c.model.memory_tanh = to_bool("memory_tanh", v); },
       [](const C& c) { return J(c.model.memory_tanh); }},
      {"memory_init_scale",
       [](C& c, const std::string& v) {
         c.model.memory_init_scale =
             in_range("memory_init_scale", to_double("memory_init_scale", v), 0, 1, false, true);
       },
       [](const C& c) { return J(c.model.memory_init_scale); }},
      {"lambda_anneal_epochs",
       [](C& c, const std::string& v) {
         const double x = to_double("lambda_anneal_epochs", v);
         if (x < 0.0) throw ConfigError("lambda_anneal_epochs", "must be >= 0");
         c.model.lambda_anneal_epochs = x;
       },
       [](const C& c) { return J(c.model.lambda_anneal_epochs); }},
      {"latent_dim",
       [](C& c, const std::string& v) { c.model.latent_dim = to_size("latent_dim", v, 1); },
       [](const C& c) { return J(c.model.latent_dim); }},
      {"aggregation",
       [](C& c, const std::string& v) {
         c.model.aggregation = wrap("aggregation", [&] { return models::parse_aggregation(v); });
       },
       [](const C& c) { return J(models::to_string(c.model.aggregation)); }},
      {"ece_bins", [](C& c, const std::string& v) { c.ece_bins = to_size("ece_bins", v, 1); },
       [](const C& c) { return J(c.ece_bins); }},
      {"ood_score",
       [](C& c, const std::string& v) {
         if (v == "entropy") c.ood_score = OodScore::entropy;
         else if (v == "max-prob") c.ood_score = OodScore::max_prob;
         else throw ConfigError("ood_score", "expected entropy or max-prob, got '" + v + "'");
       },
       [](const C& c) { return J(to_string(c.ood_score)); }},
      {"data_dir", [](C& c, const std::string& v) { c.data_dir = v; },
       [](const C& c) { return J(c.data_dir); }},
      {"workers", [](C& c, const std::string& v) { c.workers = to_size("workers", v, 1); },
       [](const C& c) { return J(c.workers); }},
      {"timing", [](C& c, const std::string& v) { c.timing = to_bool("timing", v); },
       [](const C& c) { return J(c.timing); }},
      {"train_per_class",
       [](C& c, const std::string& v) { c.train_per_class = to_size("train_per_class", v, 1); },
       [](const C& c) { return J(c.train_per_class); }},
      {"test_size", [](C& c, const std::string& v) { c.test_size = to_size("test_size", v, 1); },
       [](const C& c) { return J(c.test_size); }},
      {"ood_size", [](C& c, const std::string& v) { c.ood_size = to_size("ood_size", v, 1); },
       [](const C& c) { return J(c.ood_size); }},
      {"ood_inner",
       [](C& c, const std::string& v) {
         const double x = to_double("ood_inner", v);
         if (x < 0.0) throw ConfigError("ood_inner", "must be >= 0");
         c.ood_inner = x;
       },
       [](const C& c) { return J(c.ood_inner); }},
      {"ood_outer", [](C& c, const std::string& v) { c.ood_outer = positive("ood_outer", v); },
       [](const C& c) { return J(c.ood_outer); }},
      {"iris_test_fraction",
       [](C& c, const std::string& v) {
         c.iris_test_fraction =
             in_range("iris_test_fraction", to_double("iris_test_fraction", v), 0, 1, true, true);
       },
       [](const C& c) { return J(c.iris_test_fraction); }},
      {"fmnist_train",
       [](C& c, const std::string& v) { c.fmnist_train = to_size("fmnist_train", v, 1); },
       [](const C& c) { return J(c.fmnist_train); }},
      {"fmnist_test",
       [](C& c, const std::string& v) { c.fmnist_test = to_size("fmnist_test", v, 1); },
       [](const C& c) { return J(c.fmnist_test); }},
      {"mnist_ood", [](C& c, const std::string& v) { c.mnist_ood = to_size("mnist_ood", v, 1); },
       [](const C& c) { return J(c.mnist_ood); }},
      {"corruption",
       [](C& c, const std::string& v) {
         if (v == "none") {
           c.corruption.reset();
           return;
         }
         const auto kind = wrap("corruption", [&] { return data::parse_corruption_kind(v); });
         const int severity = c.corruption ? c.corruption->severity : 0;
         c.corruption = data::CorruptionSpec{kind, severity};
       },
       [](const C& c) {
         return c.corruption ? J(data::to_string(c.corruption->kind)) : J("none");
       }},
      {"severity",
       [](C& c, const std::string& v) {
         const auto s = to_size("severity", v, 0);
         if (s > static_cast<std::size_t>(data::kMaxSeverity)) {
           throw ConfigError("severity", "must be in [0, " + std::to_string(data::kMaxSeverity) + "]");
         }
         if (!c.corruption) c.corruption = data::CorruptionSpec{data::CorruptionKind::gaussian_noise, 0};
         c.corruption->severity = static_cast<int>(s);
       },
       [](const C& c) { return J(c.corruption ? c.corruption->severity : 0); }},
      {"decomp_outer",
       [](C& c, const std::string& v) { c.decomp_outer = to_size("decomp_outer", v, 2); },
       [](const C& c) { return J(c.decomp_outer); }},
      {"decomp_inner",
       [](C& c, const std::string& v) { c.decomp_inner = to_size("decomp_inner", v, 2); },
       [](const C& c) { return J(c.decomp_inner); }},
      {"probes",
       [](C& c, const std::string& v) {
         c.probes.clear();
         if (trim(v).empty()) return;
         for (const auto& item : split_list(v)) c.probes.push_back(to_double("probes", item));
       },
       [](const C& c) { return J(c.probes); }},
      {"probe_count",
       [](C& c, const std::string& v) { c.probe_count = to_size("probe_count", v, 1); },
       [](const C& c) { return J(c.probe_count); }},
  };
  return table;
}

}  // namespace

void ExperimentConfig::resolve() {
  switch (task) {
    case Task::two_gaussians:
      model.input_dim = 1;
      model.num_classes = 2;
      model.hidden = hidden.value_or(std::vector<std::size_t>{32});
      break;
    case Task::iris2d:
      model.input_dim = 2;
      model.num_classes = 3;
      model.hidden = hidden.value_or(std::vector<std::size_t>{32, 32});
      break;
    case Task::fmnist_vs_mnist:
      model.input_dim = 28 * 28;
      model.num_classes = 10;
      model.hidden = hidden.value_or(std::vector<std::size_t>{128});
      break;
  }
  if (!(ood_outer > ood_inner)) throw ConfigError("ood_outer", "must exceed ood_inner");
  if (corruption && corruption->kind == data::CorruptionKind::box_blur &&
      task != Task::fmnist_vs_mnist) {
    throw ConfigError("corruption", "box-blur needs an image task (fmnist-vs-mnist)");
  }
  if (!probes.empty() && probes.size() % model.input_dim != 0) {
    throw ConfigError("probes", "length must be a multiple of the input dimension " +
                                    std::to_string(model.input_dim));
  }
  try {
    model.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("model", e.what());
  }
}

ConfigLayer parse_config_text(const std::string& text, const std::string& origin) {
  ConfigLayer layer;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno), "expected 'key = value'");
    }
    layer[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return layer;
}

ConfigLayer read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

void apply_key(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& spec : key_table()) {
    if (spec.name == key) {
      spec.set(cfg, value);
      return;
    }
  }
  throw ConfigError(key, "unknown key");
}

ExperimentConfig build_config(const std::vector<ConfigLayer>& layers) {
  ExperimentConfig cfg;
  // `corruption` before `severity` so either order in a layer works.
  for (const auto& layer : layers) {
    if (auto it = layer.find("corruption"); it != layer.end()) apply_key(cfg, it->first, it->second);
    for (const auto& [k, v] : layer) {
      if (k != "corruption") apply_key(cfg, k, v);
    }
  }
  cfg.resolve();
  return cfg;
}

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& spec : key_table()) j[spec.name] = spec.get(cfg);
  return j;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& spec : key_table()) out.push_back(spec.name);
  return out;
}

}  // namespace etp::harness
