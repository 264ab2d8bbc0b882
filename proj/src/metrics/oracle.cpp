#include "etp/metrics/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace etp::metrics {

void MixtureOracle::validate() const {
  const std::size_t K = priors.size();
  if (K < 2 || means.size() != K || variances.size() != K) {
    throw std::invalid_argument("MixtureOracle: need matching priors, means and variances for "
                                ">= 2 classes");
  }
  double s = 0.0;
  for (double p : priors) {
    if (!(p >= 0.0)) throw std::invalid_argument("MixtureOracle: negative prior");
    s += p;
  }
  if (std::abs(s - 1.0) > 1e-12) {
    throw std::invalid_argument("MixtureOracle: priors sum to " + std::to_string(s));
  }
  const std::size_t D = means.front().size();
  for (std::size_t k = 0; k < K; ++k) {
    if (means[k].size() != D || variances[k].size() != D) {
      throw std::invalid_argument("MixtureOracle: class " + std::to_string(k) +
                                  " has inconsistent dimension");
    }
    for (double v : variances[k]) {
      if (!(v > 0.0)) throw std::invalid_argument("MixtureOracle: variances must be positive");
    }
  }
}

namespace {

std::vector<double> log_joint(const MixtureOracle& oracle, std::span<const double> x) {
  if (x.size() != oracle.dim()) {
    throw std::invalid_argument("bayes_oracle: input has dimension " + std::to_string(x.size()) +
                                ", oracle expects " + std::to_string(oracle.dim()));
  }
  std::vector<double> lj(oracle.num_classes());
  for (std::size_t k = 0; k < lj.size(); ++k) {
    double l = oracle.priors[k] > 0.0 ? std::log(oracle.priors[k])
                                      : -std::numeric_limits<double>::infinity();
    for (std::size_t d = 0; d < x.size(); ++d) {
      const double var = oracle.variances[k][d];
      const double diff = x[d] - oracle.means[k][d];
      l += -0.5 * (std::log(2.0 * std::numbers::pi * var) + diff * diff / var);
    }
    lj[k] = l;
  }
  return lj;
}

}  // namespace

double mixture_density(const MixtureOracle& oracle, std::span<const double> x) {
  double p = 0.0;
  for (double l : log_joint(oracle, x)) p += std::exp(l);
  return p;
}

double point_risk(std::span<const double> f_true, std::span<const double> hypothesis) {
  if (f_true.size() != hypothesis.size()) {
    throw std::invalid_argument("point_risk: hypothesis and f_true differ in length");
  }
  const auto pred = static_cast<std::size_t>(
      std::max_element(hypothesis.begin(), hypothesis.end()) - hypothesis.begin());
  double r = 0.0;
  for (std::size_t k = 0; k < f_true.size(); ++k) {
    if (k != pred) r += f_true[k];
  }
  return r;
}

OracleResult bayes_oracle(const MixtureOracle& oracle, std::span<const double> x,
                          std::span<const double> hypothesis) {
  oracle.validate();
  for (double v : x) {
    if (!std::isfinite(v)) throw std::domain_error("bayes_oracle: non-finite input");
  }
  const auto lj = log_joint(oracle, x);
  const double mx = *std::max_element(lj.begin(), lj.end());
  if (!std::isfinite(mx)) throw std::domain_error("bayes_oracle: zero mixture density at x");
  OracleResult out;
  out.f_true.resize(lj.size());
  double z = 0.0;
  for (std::size_t k = 0; k < lj.size(); ++k) z += (out.f_true[k] = std::exp(lj[k] - mx));
  for (double& f : out.f_true) f /= z;
  const double fmax = *std::max_element(out.f_true.begin(), out.f_true.end());
  out.point_risk = point_risk(out.f_true, hypothesis.empty() ? std::span<const double>(out.f_true)
                                                             : hypothesis);
  out.irreducible_risk = std::min(1.0 - fmax, fmax);
  return out;
}

double expected_bayes_error_1d(const MixtureOracle& oracle, double lo, double hi,
                               std::size_t intervals) {
  if (oracle.dim() != 1) throw std::invalid_argument("expected_bayes_error_1d needs a 1-D oracle");
  if (intervals % 2) ++intervals;
  const double h = (hi - lo) / static_cast<double>(intervals);
  auto integrand = [&](double x) {
    const double xs[1] = {x};
    const auto lj = log_joint(oracle, xs);
    double total = 0.0, best = 0.0;
    for (double l : lj) {
      const double p = std::exp(l);
      total += p;
      best = std::max(best, p);
    }
    return total - best;  // p(x) (1 - max_k f_true(x))
  };
  double s = integrand(lo) + integrand(hi);
  for (std::size_t i = 1; i < intervals; ++i) {
    s += (i % 2 ? 4.0 : 2.0) * integrand(lo + h * static_cast<double>(i));
  }
  return s * h / 3.0;
}

bool risk_product_check(double a, double b) {
  const bool antecedent = std::min(1.0 - a, a) >= std::min(1.0 - b, b);
  const bool consequent = (1.0 - a) * a >= (1.0 - b) * b;
  return !antecedent || consequent;
}

}  // namespace etp::metrics
