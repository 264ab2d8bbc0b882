#include "etp/metrics/decomposition.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace etp::metrics {
namespace {

std::size_t draw_label(std::span<const double> probs, dist::SeededRng& rng) {
  const double u = rng.uniform();
  double c = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    c += probs[k];
    if (u < c) return k;
  }
  return probs.size() - 1;
}

// Sampled marginal variance p(1 - p) from clustered indicator draws, with a
// delta-method standard error that keeps the second-order term so it does
// not vanish at p = 1/2.
struct SampledTotal {
  std::vector<std::vector<double>> cluster_means;  // [draw][class]

  void finish(std::size_t K, std::size_t per_cluster, DecompositionTriple& out) const {
    const double S = static_cast<double>(cluster_means.size());
    const double n = S * static_cast<double>(per_cluster);
    out.total_sampled.assign(K, 0.0);
    out.total_sampled_se.assign(K, 0.0);
    for (std::size_t k = 0; k < K; ++k) {
      double p = 0.0;
      for (const auto& c : cluster_means) p += c[k];
      p /= S;
      double ss = 0.0;
      for (const auto& c : cluster_means) ss += (c[k] - p) * (c[k] - p);
      const double var_p = ss / (S - 1.0) / S;
      out.total_sampled[k] = p * (1.0 - p) * n / (n - 1.0);
      const double lin = (1.0 - 2.0 * p);
      out.total_sampled_se[k] = std::sqrt(lin * lin * var_p + 2.0 * var_p * var_p);
    }
  }
};

void require_draws(std::size_t n, const char* what) {
  if (n < 2) {
    throw std::invalid_argument(std::string(what) + " needs at least two draws, got " +
                                std::to_string(n));
  }
}

}  // namespace

DecompositionTriple decompose_pbm(const SimplexSampler& sampler, std::size_t draws,
                                  dist::SeededRng& rng) {
  require_draws(draws, "decompose_pbm");
  std::vector<std::vector<double>> h(draws);
  SampledTotal sampled;
  sampled.cluster_means.resize(draws);
  std::size_t K = 0;
  for (std::size_t s = 0; s < draws; ++s) {
    h[s] = sampler(rng);
    if (s == 0) K = h[s].size();
    if (h[s].size() != K || K < 2) {
      throw std::invalid_argument("decompose_pbm: sampler returned inconsistent class counts");
    }
    sampled.cluster_means[s].assign(K, 0.0);
    sampled.cluster_means[s][draw_label(h[s], rng)] = 1.0;
  }

  const double S = static_cast<double>(draws);
  DecompositionTriple out;
  out.reducible.assign(K, 0.0);
  out.irreducible.assign(K, 0.0);
  out.data.assign(K, 0.0);
  out.total.assign(K, 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    double mean = 0.0;
    for (const auto& hs : h) mean += hs[k];
    mean /= S;
    double var = 0.0, data = 0.0;
    for (const auto& hs : h) {
      var += (hs[k] - mean) * (hs[k] - mean);
      data += hs[k] * (1.0 - hs[k]);
    }
    out.reducible[k] = var / S;
    out.data[k] = data / S;
    out.total[k] = mean * (1.0 - mean);
  }
  sampled.finish(K, 1, out);
  return out;
}

DecompositionTriple decompose_cbm(const ConcentrationSampler& sampler, std::size_t outer_draws,
                                  std::size_t inner_draws, dist::SeededRng& rng) {
  require_draws(outer_draws, "decompose_cbm (outer)");
  require_draws(inner_draws, "decompose_cbm (inner)");
  std::vector<dist::DirichletMoments> moments;
  moments.reserve(outer_draws);
  SampledTotal sampled;
  sampled.cluster_means.resize(outer_draws);
  std::size_t K = 0;
  for (std::size_t s = 0; s < outer_draws; ++s) {
    const dist::DirichletParams alpha = sampler(rng);
    if (s == 0) K = alpha.size();
    if (alpha.size() != K) {
      throw std::invalid_argument("decompose_cbm: sampler returned inconsistent class counts");
    }
    moments.push_back(dist::dirichlet_moments(alpha));
    auto& cluster = sampled.cluster_means[s];
    cluster.assign(K, 0.0);
    for (std::size_t j = 0; j < inner_draws; ++j) {
      const auto pi = dist::dirichlet_sample(alpha, rng);
      cluster[draw_label(pi, rng)] += 1.0 / static_cast<double>(inner_draws);
    }
  }

  const double S = static_cast<double>(outer_draws);
  DecompositionTriple out;
  out.reducible.assign(K, 0.0);
  out.irreducible.assign(K, 0.0);
  out.data.assign(K, 0.0);
  out.total.assign(K, 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    double mean = 0.0;
    for (const auto& m : moments) mean += m.mean[k];
    mean /= S;
    double spread = 0.0, irreducible = 0.0, data = 0.0;
    for (const auto& m : moments) {
      const double mk = m.mean[k];
      spread += (mk - mean) * (mk - mean);
      irreducible += m.variance[k];
      // E[pi (1 - pi)] = E[pi] - E[pi]^2 - Var[pi]
      data += mk * (1.0 - mk) - m.variance[k];
    }
    out.reducible[k] = spread / S;
    out.irreducible[k] = irreducible / S;
    out.data[k] = data / S;
    out.total[k] = mean * (1.0 - mean);
  }
  sampled.finish(K, inner_draws, out);
  return out;
}

}  // namespace etp::metrics
