#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace etp::metrics {

/// Ground-truth class-conditional Gaussian mixture: class k has prior
/// priors[k] and density N(means[k], diag(variances[k])).
struct MixtureOracle {
  std::vector<double> priors;
  std::vector<std::vector<double>> means;
  std::vector<std::vector<double>> variances;

  std::size_t num_classes() const { return priors.size(); }
  std::size_t dim() const { return means.empty() ? 0 : means.front().size(); }
  /// Throws std::invalid_argument when priors do not sum to one, variances
  /// are not positive, or dimensions disagree.
  void validate() const;
};

struct OracleResult {
  std::vector<double> f_true;
  /// Risk of the hypothesis (or of f_true itself when none is given):
  /// the f_true mass on classes other than argmax(hypothesis).
  double point_risk;
  /// min(1 - max f_true, max f_true).
  double irreducible_risk;
};

/// Posterior class probabilities pi_k p(x|k) / sum_j pi_j p(x|j) at x.
/// Throws std::domain_error when the mixture density at x is zero.
OracleResult bayes_oracle(const MixtureOracle& oracle, std::span<const double> x,
                          std::span<const double> hypothesis = {});

double point_risk(std::span<const double> f_true, std::span<const double> hypothesis);

/// Mixture density p(x) = sum_k pi_k p(x|k).
double mixture_density(const MixtureOracle& oracle, std::span<const double> x);

/// Expected Bayes error E_x[1 - max_k f_true(x)] for a one-dimensional
/// oracle, by composite Simpson integration over [lo, hi].
double expected_bayes_error_1d(const MixtureOracle& oracle, double lo, double hi,
                               std::size_t intervals = 20000);

/// Checks, for one pair in [0.5, 1]^2, that
/// min(1-a, a) >= min(1-b, b) implies (1-a) a >= (1-b) b.
bool risk_product_check(double a, double b);

}  // namespace etp::metrics
