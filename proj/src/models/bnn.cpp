#include "etp/models/bnn.hpp"

#include <stdexcept>

namespace etp::models {

namespace {
constexpr const char* kPrefix = "net";
}

ad::Var softmax_nll(ad::Var logits, std::span<const int> labels) {
  ad::Tape& t = *logits.tape();
  const ad::Tensor oh = one_hot(labels, logits.value().cols());
  return -ad::mean(ad::row_sum(ad::log_softmax_rows(logits) * t.constant(oh)));
}

BnnModel::BnnModel(ModelConfig config, dist::SeededRng& rng) : Predictor(std::move(config)) {
  config_.kind = ModelKind::bnn;
  add_variational_mlp_parameters(params_, kPrefix, spec(), config_.init_logvar, rng);
}

ad::Var BnnModel::logits(const Bindings& b, ad::Var x, dist::SeededRng* rng) const {
  return variational_mlp_forward(spec(), b, kPrefix, x, rng);
}

ad::Var BnnModel::loss(ad::Tape& tape, const Bindings& b, const Batch& batch,
                       dist::SeededRng& rng) {
  if (batch.y.empty()) throw std::invalid_argument("bnn loss: empty batch");
  const std::size_t S = config_.train_w_samples;
  ad::Var x = tape.constant(batch.x);
  ad::Var nll;
  for (std::size_t s = 0; s < S; ++s) {
    ad::Var term = softmax_nll(logits(b, x, &rng), batch.y);
    nll = nll.valid() ? nll + term : term;
  }
  nll = ad::scale(nll, 1.0 / static_cast<double>(S));
  ad::Var kl = variational_mlp_kl(spec(), b, kPrefix, config_.beta);
  return nll + ad::scale(kl, 1.0 / static_cast<double>(batch.dataset_size));
}

ad::Tensor BnnModel::predict(const ad::Tensor& x, dist::SeededRng& rng) const {
  ad::Tape tape;
  const Bindings b = params_.bind(tape, false);
  ad::Var xv = tape.constant(x);
  const std::size_t S = config_.predict_w_samples;
  ad::Tensor out({x.rows(), config_.num_classes});
  for (std::size_t s = 0; s < S; ++s) {
    const ad::Tensor& p = ad::softmax_rows(logits(b, xv, &rng)).value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += p[i];
  }
  for (auto& v : out.data()) v /= static_cast<double>(S);
  return out;
}

metrics::DecompositionTriple BnnModel::decompose(const ad::Tensor& x_row, std::size_t outer_draws,
                                                 std::size_t /*inner_draws*/,
                                                 dist::SeededRng& rng) const {
  ad::Tape tape;
  const Bindings b = params_.bind(tape, false);
  ad::Var xv = tape.constant(x_row);
  auto sampler = [&](dist::SeededRng& r) {
    const ad::Tensor& p = ad::softmax_rows(logits(b, xv, &r)).value();
    return std::vector<double>(p.data().begin(), p.data().end());
  };
  return metrics::decompose_pbm(sampler, outer_draws, rng);
}

}  // namespace etp::models
