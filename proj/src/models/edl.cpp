#include "etp/models/edl.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "etp/dist/dirichlet.hpp"

namespace etp::models {

namespace {
constexpr const char* kPrefix = "net";

dist::DirichletParams uniform_dirichlet(std::size_t K) {
  return dist::DirichletParams(std::vector<double>(K, 1.0));
}
}  // namespace

ad::Var edl_loss_rows(ad::Var alpha, std::span<const int> labels, double lambda) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("edl loss: lambda must be non-negative");
  const std::size_t K = alpha.value().cols();
  for (double a : alpha.value().data()) {
    if (!(a > 0.0)) throw std::domain_error("edl loss: non-positive concentration");
  }
  ad::Tape& t = *alpha.tape();
  ad::Var y = t.constant(one_hot(labels, K));
  ad::Var sq = ad::row_sum(ad::square(y - dist::tape::mean(alpha)) + dist::tape::variance(alpha));
  if (lambda == 0.0) return sq;
  return sq + ad::scale(dist::tape::kl_to_reference(alpha, uniform_dirichlet(K)), lambda);
}

std::vector<double> edl_negative_elbo(const ad::Tensor& alpha, std::span<const int> labels,
                                      double kl_weight) {
  const std::size_t n = alpha.rows(), K = alpha.cols();
  if (labels.size() != n) throw std::invalid_argument("edl_negative_elbo: label count mismatch");
  // -E[log N(y | pi, I/2)] = (K/2) log(pi) + E[(y - pi)^T (y - pi)]
  const double log_norm = 0.5 * static_cast<double>(K) * std::log(std::numbers::pi);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> a(alpha.row_view(i).begin(), alpha.row_view(i).end());
    double a0 = 0.0;
    for (double v : a) a0 += v;
    double expected_sq = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      const double yk = static_cast<std::size_t>(labels[i]) == k ? 1.0 : 0.0;
      const double first = a[k] / a0;
      const double second = a[k] * (a[k] + 1.0) / (a0 * (a0 + 1.0));
      expected_sq += yk * yk - 2.0 * yk * first + second;
    }
    const double kl = dist::dirichlet_kl_to_uniform(dist::DirichletParams(std::move(a)));
    out[i] = log_norm + expected_sq + kl_weight * kl;
  }
  return out;
}

EdlModel::EdlModel(ModelConfig config, dist::SeededRng& rng) : Predictor(std::move(config)) {
  config_.kind = ModelKind::edl;
  add_mlp_parameters(params_, kPrefix, spec(), rng);
}

ad::Var EdlModel::concentration(const Bindings& b, ad::Var x) const {
  return clamped_exp(mlp_forward(spec(), b, kPrefix, x));
}

double EdlModel::lambda_at(std::size_t epoch) const {
  if (config_.lambda_anneal_epochs <= 0.0) return 1.0;
  return std::min(1.0, static_cast<double>(epoch) / config_.lambda_anneal_epochs);
}

ad::Var EdlModel::loss(ad::Tape& tape, const Bindings& b, const Batch& batch,
                       dist::SeededRng& /*rng*/) {
  if (batch.y.empty()) throw std::invalid_argument("edl loss: empty batch");
  ad::Var alpha = concentration(b, tape.constant(batch.x));
  return ad::mean(edl_loss_rows(alpha, batch.y, lambda_at(batch.epoch)));
}

ad::Tensor EdlModel::predict(const ad::Tensor& x, dist::SeededRng& /*rng*/) const {
  ad::Tape tape;
  const Bindings b = params_.bind(tape, false);
  return dirichlet_means(concentration(b, tape.constant(x)).value());
}

}  // namespace etp::models
