#include "etp/models/mlp.hpp"

#include <cmath>
#include <stdexcept>

#include "etp/dist/gaussian.hpp"

namespace etp::models {

std::string_view to_string(Activation a) {
  return a == Activation::relu ? "relu" : "tanh";
}

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

std::size_t MlpSpec::fan_in(std::size_t layer) const {
  return layer == 0 ? input_dim : hidden.at(layer - 1);
}

std::size_t MlpSpec::fan_out(std::size_t layer) const {
  return layer == hidden.size() ? output_dim : hidden.at(layer);
}

void MlpSpec::validate() const {
  if (input_dim == 0) throw std::invalid_argument("MLP input dimension must be positive");
  if (output_dim == 0) throw std::invalid_argument("MLP output dimension must be positive");
  for (std::size_t w : hidden) {
    if (w == 0) throw std::invalid_argument("MLP hidden widths must be positive");
  }
}

namespace {

std::string weight_name(const std::string& prefix, std::size_t l) {
  return prefix + ".W" + std::to_string(l);
}
std::string bias_name(const std::string& prefix, std::size_t l) {
  return prefix + ".b" + std::to_string(l);
}

ad::Tensor uniform_init(ad::Shape shape, double bound, dist::SeededRng& rng) {
  ad::Tensor t(std::move(shape));
  for (auto& v : t.data()) v = rng.uniform(-bound, bound);
  return t;
}

ad::Var activate(Activation a, ad::Var h) {
  return a == Activation::relu ? ad::relu(h) : ad::tanh(h);
}

template <typename Weights>
ad::Var forward_with(const MlpSpec& spec, ad::Var x, Weights&& weights) {
  ad::Var h = x;
  for (std::size_t l = 0; l < spec.num_layers(); ++l) {
    auto [W, bias] = weights(l);
    h = ad::add_row(ad::matmul(h, W), bias);
    if (l + 1 < spec.num_layers()) h = activate(spec.activation, h);
  }
  return h;
}

}  // namespace

void add_mlp_parameters(ParameterStore& store, const std::string& prefix, const MlpSpec& spec,
                        dist::SeededRng& rng) {
  spec.validate();
  for (std::size_t l = 0; l < spec.num_layers(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(spec.fan_in(l)));
    store.add(weight_name(prefix, l), uniform_init({spec.fan_in(l), spec.fan_out(l)}, bound, rng));
    store.add(bias_name(prefix, l), uniform_init({1, spec.fan_out(l)}, bound, rng));
  }
}

ad::Var mlp_forward(const MlpSpec& spec, const Bindings& b, const std::string& prefix, ad::Var x) {
  return forward_with(spec, x, [&](std::size_t l) {
    return std::pair{b[weight_name(prefix, l)], b[bias_name(prefix, l)]};
  });
}

void add_variational_mlp_parameters(ParameterStore& store, const std::string& prefix,
                                    const MlpSpec& spec, double init_logvar,
                                    dist::SeededRng& rng) {
  spec.validate();
  for (std::size_t l = 0; l < spec.num_layers(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(spec.fan_in(l)));
    const ad::Shape ws{spec.fan_in(l), spec.fan_out(l)};
    const ad::Shape bs{1, spec.fan_out(l)};
    store.add(weight_name(prefix, l) + ".mu", uniform_init(ws, bound, rng));
    store.add(weight_name(prefix, l) + ".logvar", ad::Tensor(ws, init_logvar));
    store.add(bias_name(prefix, l) + ".mu", uniform_init(bs, bound, rng));
    store.add(bias_name(prefix, l) + ".logvar", ad::Tensor(bs, init_logvar));
  }
}

ad::Var variational_mlp_forward(const MlpSpec& spec, const Bindings& b, const std::string& prefix,
                                ad::Var x, dist::SeededRng* rng) {
  auto draw = [&](const std::string& name) {
    ad::Var mu = b[name + ".mu"];
    if (rng == nullptr) return mu;
    return dist::tape::reparam(mu, b[name + ".logvar"], dist::standard_normal(mu.shape(), *rng));
  };
  return forward_with(spec, x, [&](std::size_t l) {
    ad::Var W = draw(weight_name(prefix, l));
    ad::Var bias = draw(bias_name(prefix, l));
    return std::pair{W, bias};
  });
}

ad::Var variational_mlp_kl(const MlpSpec& spec, const Bindings& b, const std::string& prefix,
                           double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("prior precision beta must be positive");
  const double prior_logvar = -std::log(beta);
  ad::Var total;
  for (std::size_t l = 0; l < spec.num_layers(); ++l) {
    for (const std::string& name : {weight_name(prefix, l), bias_name(prefix, l)}) {
      ad::Var kl = dist::tape::kl_diag(b[name + ".mu"], b[name + ".logvar"], 0.0, prior_logvar);
      total = total.valid() ? ad::add(total, kl) : kl;
    }
  }
  return total;
}

}  // namespace etp::models
