#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "etp/dist/dirichlet.hpp"
#include "etp/dist/rng.hpp"

namespace etp::metrics {

/// Per-class split of the predictive variance Var[y = k | x].
///
/// `total` is the Bernoulli variance p(1 - p) of the marginal predictive
/// computed from the same draws as the three terms, so the terms add up to it
/// up to rounding. `total_sampled` re-estimates the same quantity by drawing
/// labels, with `total_sampled_se` its Monte-Carlo standard error; the pair is
/// what the "sum equals total within 3 SE" checks compare against.
struct DecompositionTriple {
  std::vector<double> reducible;
  std::vector<double> irreducible;
  std::vector<double> data;
  std::vector<double> total;
  std::vector<double> total_sampled;
  std::vector<double> total_sampled_se;

  std::size_t num_classes() const { return total.size(); }
  double term_sum(std::size_t k) const { return reducible[k] + irreducible[k] + data[k]; }
};

/// One draw of the global parameters mapped to class probabilities.
using SimplexSampler = std::function<std::vector<double>(dist::SeededRng&)>;
/// One draw of the global parameters mapped to the Dirichlet over pi.
using ConcentrationSampler = std::function<dist::DirichletParams(dist::SeededRng&)>;

/// Two-term split for parametric models: reducible = Var_theta[h_k],
/// data = E_theta[h_k (1 - h_k)], irreducible = 0.
DecompositionTriple decompose_pbm(const SimplexSampler& sampler, std::size_t draws,
                                  dist::SeededRng& rng);

/// Three-term split for complete models: reducible = Var over outer draws of
/// the Dirichlet mean, irreducible = mean Dirichlet variance, data = mean of
/// E[pi_k (1 - pi_k)]. `inner_draws` labels are sampled per outer draw for the
/// sampled total.
DecompositionTriple decompose_cbm(const ConcentrationSampler& sampler, std::size_t outer_draws,
                                  std::size_t inner_draws, dist::SeededRng& rng);

}  // namespace etp::metrics
