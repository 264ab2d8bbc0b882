#include "etp/models/etp.hpp"

#include <cmath>
#include <stdexcept>

#include "etp/dist/dirichlet.hpp"
#include "etp/dist/gaussian.hpp"

namespace etp::models {

namespace {
constexpr const char* kEncoder = "encoder";
constexpr const char* kKey = "key";
}  // namespace

AttentionRead etp_attend(ad::Var embedding, ad::Var cells, ad::Var keys) {
  const std::size_t K = embedding.value().cols();
  if (cells.value().cols() != K || keys.value().cols() != K ||
      keys.value().rows() != cells.value().rows()) {
    throw ad::ShapeError("etp_attend: embedding " + ad::to_string(embedding.shape()) +
                         ", cells " + ad::to_string(cells.shape()) + ", keys " +
                         ad::to_string(keys.shape()));
  }
  ad::Var scores = ad::scale(ad::matmul(embedding, ad::transpose(keys)),
                             1.0 / std::sqrt(static_cast<double>(K)));
  ad::Var weights = ad::softmax_rows(scores);
  return {weights, ad::matmul(weights, cells)};
}

ad::Var etp_log_concentration(ad::Var embedding, ad::Var read, Combiner mode) {
  return mode == Combiner::residual ? embedding + ad::tanh(read) : read;
}

ad::Tensor etp_memory_update(const ad::Tensor& memory, const ad::Tensor& context_embeddings,
                             std::span<const int> context_labels, const KeyFunction& keys,
                             const MemoryUpdateConfig& config, dist::SeededRng& rng) {
  const std::size_t R = memory.rows(), K = memory.cols();
  const std::size_t C = context_labels.size();
  if (config.samples == 0) throw std::invalid_argument("memory update: need at least one sample");
  if (!(config.kappa2 >= 0.0)) throw std::invalid_argument("memory update: kappa2 must be >= 0");
  if (C > 0 && (context_embeddings.rows() != C || context_embeddings.cols() != K)) {
    throw ad::ShapeError("memory update: context embeddings " +
                         ad::to_string(context_embeddings.shape()) + " for " +
                         std::to_string(C) + " labels and K = " + std::to_string(K));
  }
  for (int y : context_labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= K) {
      throw std::out_of_range("memory update: context label " + std::to_string(y) +
                              " outside [0, " + std::to_string(K) + ")");
    }
  }

  // onehot(y_j) + softmax(v_j), fixed across samples.
  ad::Tensor signal({C == 0 ? 1 : C, K});
  for (std::size_t j = 0; j < C; ++j) {
    auto v = context_embeddings.row_view(j);
    double mx = v[0];
    for (double e : v) mx = std::max(mx, e);
    double z = 0.0;
    for (double e : v) z += std::exp(e - mx);
    for (std::size_t k = 0; k < K; ++k) signal(j, k) = std::exp(v[k] - mx) / z;
    signal(j, static_cast<std::size_t>(context_labels[j])) += 1.0;
  }

  const double kappa = std::sqrt(config.kappa2);
  const double inv_sqrt_k = 1.0 / std::sqrt(static_cast<double>(K));
  ad::Tensor next({R, K});
  ad::Tensor z({R, K});
  std::vector<double> phi(R);
  for (std::size_t s = 0; s < config.samples; ++s) {
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = memory[i] + kappa * rng.normal();
    const ad::Tensor key = keys(z);
    ad::Tensor update({R, K});
    for (std::size_t i = 0; i < update.size(); ++i) update[i] = config.gamma * memory[i];
    for (std::size_t j = 0; j < C; ++j) {
      auto v = context_embeddings.row_view(j);
      double mx = -INFINITY;
      for (std::size_t r = 0; r < R; ++r) {
        double dot = 0.0;
        for (std::size_t k = 0; k < K; ++k) dot += key(r, k) * v[k];
        phi[r] = dot * inv_sqrt_k;
        mx = std::max(mx, phi[r]);
      }
      double total = 0.0;
      for (auto& p : phi) total += (p = std::exp(p - mx));
      for (std::size_t r = 0; r < R; ++r) {
        const double w = (1.0 - config.gamma) * phi[r] / total;
        for (std::size_t k = 0; k < K; ++k) update(r, k) += w * signal(j, k);
      }
    }
    for (std::size_t i = 0; i < next.size(); ++i) {
      next[i] += config.apply_tanh ? std::tanh(update[i]) : update[i];
    }
  }
  for (auto& v : next.data()) v /= static_cast<double>(config.samples);
  return next;
}

EtpModel::EtpModel(ModelConfig config, dist::SeededRng& rng) : Predictor(std::move(config)) {
  config_.kind = ModelKind::etp;
  add_variational_mlp_parameters(params_, kEncoder, encoder(), config_.init_logvar, rng);
  if (config_.key_network == KeyNetwork::mlp) add_mlp_parameters(params_, kKey, key_spec(), rng);
  memory_ = ad::Tensor({config_.memory_cells, config_.num_classes});
  for (auto& v : memory_.data()) v = rng.uniform(-config_.memory_init_scale, config_.memory_init_scale);
}

MlpSpec EtpModel::key_spec() const {
  MlpSpec s;
  s.input_dim = config_.num_classes;
  s.hidden = config_.key_hidden;
  s.output_dim = config_.num_classes;
  s.activation = config_.activation;
  return s;
}

void EtpModel::set_memory(ad::Tensor m) {
  if (m.shape() != memory_.shape()) {
    throw ad::ShapeError("set_memory: expected " + ad::to_string(memory_.shape()) + ", got " +
                         ad::to_string(m.shape()));
  }
  memory_ = std::move(m);
}

void EtpModel::restore_state(const std::string& name, ad::Tensor value) {
  if (name != "memory") Predictor::restore_state(name, std::move(value));
  else set_memory(std::move(value));
}

ad::Var EtpModel::embedding(const Bindings& b, ad::Var x, dist::SeededRng* w_rng) const {
  return variational_mlp_forward(encoder(), b, kEncoder, x, w_rng);
}

ad::Var EtpModel::keys(const Bindings& b, ad::Var cells) const {
  if (config_.key_network == KeyNetwork::identity) return cells;
  return mlp_forward(key_spec(), b, kKey, cells);
}

ad::Tensor EtpModel::sample_memory(dist::SeededRng& rng) const {
  ad::Tensor z = memory_;
  const double kappa = std::sqrt(config_.kappa2);
  for (auto& v : z.data()) v += kappa * rng.normal();
  return z;
}

ad::Var EtpModel::concentration(const Bindings& b, ad::Var x, const ad::Tensor& z,
                                dist::SeededRng* w_rng) const {
  ad::Var v = embedding(b, x, w_rng);
  ad::Var cells = x.tape()->constant(z);
  const AttentionRead att = etp_attend(v, cells, keys(b, cells));
  return clamped_exp(etp_log_concentration(v, att.read, config_.combiner));
}

ad::Var EtpModel::free_energy(ad::Tape& tape, const Bindings& b, const Batch& batch,
                              std::size_t w_samples, std::size_t z_samples,
                              dist::SeededRng& rng) const {
  if (w_samples == 0 || z_samples == 0) {
    throw std::invalid_argument("free energy: sample counts must be >= 1");
  }
  if (batch.y.empty()) throw std::invalid_argument("free energy: empty batch");
  const dist::DirichletParams flat(std::vector<double>(config_.num_classes, 1.0));
  ad::Var x = tape.constant(batch.x);
  ad::Var data_term;
  for (std::size_t sw = 0; sw < w_samples; ++sw) {
    ad::Var v = embedding(b, x, &rng);
    for (std::size_t sz = 0; sz < z_samples; ++sz) {
      ad::Var cells = tape.constant(sample_memory(rng));
      const AttentionRead att = etp_attend(v, cells, keys(b, cells));
      ad::Var alpha = clamped_exp(etp_log_concentration(v, att.read, config_.combiner));
      ad::Var term = -ad::mean(dist::tape::expected_log_prob(alpha, batch.y));
      if (config_.pi_kl_weight > 0.0) {
        term = term + ad::scale(ad::mean(dist::tape::kl_to_reference(alpha, flat)),
                                config_.pi_kl_weight);
      }
      data_term = data_term.valid() ? data_term + term : term;
    }
  }
  data_term = ad::scale(data_term, 1.0 / static_cast<double>(w_samples * z_samples));
  ad::Var kl = variational_mlp_kl(encoder(), b, kEncoder, config_.beta);
  return data_term + ad::scale(kl, 1.0 / static_cast<double>(batch.dataset_size));
}

ad::Var EtpModel::loss(ad::Tape& tape, const Bindings& b, const Batch& batch,
                       dist::SeededRng& rng) {
  return free_energy(tape, b, batch, config_.train_w_samples, config_.train_z_samples, rng);
}

void EtpModel::before_step(const Batch& batch, dist::SeededRng& rng) {
  ad::Tensor context_v;
  if (!batch.context_y.empty()) {
    ad::Tape tape;
    const Bindings b = params_.bind(tape, false);
    context_v = embedding(b, tape.constant(batch.context_x), nullptr).value();
  }
  const KeyFunction key_fn = [this](const ad::Tensor& z) {
    if (config_.key_network == KeyNetwork::identity) return z;
    ad::Tape tape;
    const Bindings b = params_.bind(tape, false);
    return keys(b, tape.constant(z)).value();
  };
  MemoryUpdateConfig mc;
  mc.gamma = config_.gamma;
  mc.kappa2 = config_.kappa2;
  mc.samples = config_.memory_samples;
  mc.apply_tanh = config_.memory_tanh;
  memory_ = etp_memory_update(memory_, context_v, batch.context_y, key_fn, mc, rng);
}

ad::Tensor EtpModel::predict(const ad::Tensor& x, dist::SeededRng& rng) const {
  ad::Tape tape;
  const Bindings b = params_.bind(tape, false);
  ad::Var xv = tape.constant(x);
  ad::Tensor out({x.rows(), config_.num_classes});
  const std::size_t Sw = config_.predict_w_samples, Sz = config_.predict_z_samples;
  for (std::size_t sw = 0; sw < Sw; ++sw) {
    ad::Var v = embedding(b, xv, &rng);
    for (std::size_t sz = 0; sz < Sz; ++sz) {
      ad::Var cells = tape.constant(sample_memory(rng));
      const AttentionRead att = etp_attend(v, cells, keys(b, cells));
      ad::Var alpha = clamped_exp(etp_log_concentration(v, att.read, config_.combiner));
      const ad::Tensor p = dirichlet_means(alpha.value());
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += p[i];
    }
  }
  for (auto& v : out.data()) v /= static_cast<double>(Sw * Sz);
  return out;
}

ad::Tensor EtpModel::memory_evidence(const ad::Tensor& x, std::size_t samples,
                                     dist::SeededRng& rng) const {
  if (samples == 0) throw std::invalid_argument("memory_evidence: need at least one sample");
  ad::Tape tape;
  const Bindings b = params_.bind(tape, false);
  ad::Var v = embedding(b, tape.constant(x), nullptr);
  ad::Tensor out({x.rows(), config_.num_classes});
  for (std::size_t s = 0; s < samples; ++s) {
    ad::Var cells = tape.constant(sample_memory(rng));
    const ad::Tensor& e = ad::tanh(etp_attend(v, cells, keys(b, cells)).read).value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += e[i];
  }
  for (auto& v2 : out.data()) v2 /= static_cast<double>(samples);
  return out;
}

metrics::DecompositionTriple EtpModel::decompose(const ad::Tensor& x_row, std::size_t outer_draws,
                                                 std::size_t inner_draws,
                                                 dist::SeededRng& rng) const {
  auto sampler = [&](dist::SeededRng& r) {
    ad::Tape tape;
    const Bindings b = params_.bind(tape, false);
    const ad::Tensor z = sample_memory(r);
    ad::Var xv = tape.constant(x_row);
    const ad::Tensor& a = concentration(b, xv, z, &r).value();
    return dist::DirichletParams(std::vector<double>(a.data().begin(), a.data().end()));
  };
  return metrics::decompose_cbm(sampler, outer_draws, inner_draws, rng);
}

}  // namespace etp::models
