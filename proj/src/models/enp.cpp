#include "etp/models/enp.hpp"

#include <cmath>
#include <stdexcept>

#include "etp/dist/dirichlet.hpp"
#include "etp/dist/gaussian.hpp"

namespace etp::models {

namespace {
constexpr const char* kEmbed = "embed";
constexpr const char* kContext = "context";
constexpr const char* kHead = "head";

ad::Tensor ones(std::size_t rows, std::size_t cols, double value = 1.0) {
  return ad::Tensor({rows, cols}, value);
}
}  // namespace

EnpModel::EnpModel(ModelConfig config, dist::SeededRng& rng) : Predictor(std::move(config)) {
  config_.kind = ModelKind::enp;
  add_mlp_parameters(params_, kEmbed, embed_spec(), rng);
  add_mlp_parameters(params_, kContext, context_spec(), rng);
  add_mlp_parameters(params_, kHead, head_spec(), rng);
}

MlpSpec EnpModel::embed_spec() const { return config_.encoder_spec(config_.latent_dim); }

MlpSpec EnpModel::context_spec() const {
  MlpSpec s = config_.encoder_spec(2 * config_.latent_dim);
  s.input_dim = config_.input_dim + config_.num_classes;
  return s;
}

MlpSpec EnpModel::head_spec() const {
  MlpSpec s = config_.encoder_spec(config_.num_classes);
  s.input_dim = 2 * config_.latent_dim;
  return s;
}

ad::Var EnpModel::target_embedding(const Bindings& b, ad::Var x) const {
  return mlp_forward(embed_spec(), b, kEmbed, x);
}

ad::Var EnpModel::concentration(const Bindings& b, ad::Var z, ad::Var target_embedding) const {
  return clamped_exp(mlp_forward(head_spec(), b, kHead, ad::concat_cols(z, target_embedding)));
}

LatentAggregate EnpModel::aggregate(const Bindings& b, ad::Var target_embedding,
                                    ad::Var context_x, std::span<const int> context_y) const {
  const std::size_t C = context_y.size();
  if (C == 0) throw std::invalid_argument("enp: empty context set");
  if (context_x.value().rows() != C) throw ad::ShapeError("enp: context rows and labels differ");
  ad::Tape& t = *context_x.tape();
  const std::size_t L = config_.latent_dim;
  const std::size_t N = target_embedding.value().rows();

  ad::Var input = ad::concat_cols(context_x, t.constant(one_hot(context_y, config_.num_classes)));
  ad::Var enc = mlp_forward(context_spec(), b, kContext, input);
  ad::Var mu_j = ad::slice_cols(enc, 0, L);
  ad::Var var_j = ad::exp(ad::slice_cols(enc, L, L));

  ad::Var weights;
  if (config_.aggregation == Aggregation::mean) {
    weights = t.constant(ones(N, C, 1.0 / static_cast<double>(C)));
  } else {
    ad::Var scores = ad::scale(ad::matmul(target_embedding, ad::transpose(mu_j)),
                               1.0 / std::sqrt(static_cast<double>(L)));
    weights = ad::softmax_rows(scores);
  }
  return {ad::matmul(weights, mu_j), ad::matmul(weights, var_j)};
}

ad::Var EnpModel::loss(ad::Tape& tape, const Bindings& b, const Batch& batch,
                       dist::SeededRng& rng) {
  if (batch.y.empty()) throw std::invalid_argument("enp loss: empty batch");
  if (batch.context_y.empty()) throw std::invalid_argument("enp loss: empty training context");
  const std::size_t N = batch.y.size();
  const std::size_t S = config_.train_z_samples;
  ad::Var e = target_embedding(b, tape.constant(batch.x));
  const LatentAggregate agg = aggregate(b, e, tape.constant(batch.context_x), batch.context_y);
  ad::Var log_var = ad::log(agg.variance);

  const dist::DirichletParams flat(std::vector<double>(config_.num_classes, 1.0));
  ad::Var data_term;
  for (std::size_t s = 0; s < S; ++s) {
    ad::Var z = dist::tape::reparam(agg.mean, log_var,
                                    dist::standard_normal(agg.mean.shape(), rng));
    ad::Var alpha = concentration(b, z, e);
    ad::Var term = -ad::mean(dist::tape::expected_log_prob(alpha, batch.y));
    if (config_.pi_kl_weight > 0.0) {
      term = term + ad::scale(ad::mean(dist::tape::kl_to_reference(alpha, flat)),
                              config_.pi_kl_weight);
    }
    data_term = data_term.valid() ? data_term + term : term;
  }
  data_term = ad::scale(data_term, 1.0 / static_cast<double>(S));
  // kl_diag sums over all N rows; mean row KL, then one latent per batch.
  ad::Var kl = dist::tape::kl_diag(agg.mean, log_var, 1.0, std::log(config_.kappa2));
  return data_term + ad::scale(kl, 1.0 / static_cast<double>(N * N));
}

ad::Tensor EnpModel::predict(const ad::Tensor& x, dist::SeededRng& rng) const {
  ad::Tape tape;
  const Bindings b = params_.bind(tape, false);
  ad::Var e = target_embedding(b, tape.constant(x));
  const std::size_t N = x.rows(), L = config_.latent_dim;
  const std::size_t S = config_.predict_z_samples;
  const double kappa = std::sqrt(config_.kappa2);
  ad::Tensor out({N, config_.num_classes});
  std::vector<double> draw(L);
  for (std::size_t s = 0; s < S; ++s) {
    for (auto& v : draw) v = 1.0 + kappa * rng.normal();
    ad::Tensor z({N, L});
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t l = 0; l < L; ++l) z(i, l) = draw[l];
    const ad::Tensor p = dirichlet_means(concentration(b, tape.constant(z), e).value());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += p[i];
  }
  for (auto& v : out.data()) v /= static_cast<double>(S);
  return out;
}

}  // namespace etp::models
