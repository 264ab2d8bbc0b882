#include "etp/data/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace etp::data {

metrics::MixtureOracle two_gaussians_oracle() {
  metrics::MixtureOracle o;
  o.priors = {0.5, 0.5};
  o.means = {{-1.0}, {1.0}};
  o.variances = {{1.0}, {1.0}};
  return o;
}

SyntheticTask gen_two_gaussians(std::size_t n_per_class, dist::SeededRng& rng) {
  if (n_per_class == 0) throw std::invalid_argument("gen_two_gaussians: n_per_class must be >= 1");
  SyntheticTask task;
  task.oracle = two_gaussians_oracle();
  auto& ds = task.data;
  ds.dim = 1;
  ds.num_classes = 2;
  for (int k = 0; k < 2; ++k) {
    for (std::size_t i = 0; i < n_per_class; ++i) {
      ds.features.push_back(rng.normal(task.oracle.means[k][0], 1.0));
      ds.labels.push_back(k);
    }
  }
  return task;
}

LabeledDataset sample_from_oracle(const metrics::MixtureOracle& oracle, std::size_t n,
                                  dist::SeededRng& rng) {
  oracle.validate();
  LabeledDataset ds;
  ds.dim = oracle.dim();
  ds.num_classes = oracle.num_classes();
  ds.features.reserve(n * ds.dim);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform();
    std::size_t k = 0;
    double c = oracle.priors[0];
    while (u >= c && k + 1 < oracle.num_classes()) c += oracle.priors[++k];
    for (std::size_t d = 0; d < ds.dim; ++d) {
      ds.features.push_back(rng.normal(oracle.means[k][d], std::sqrt(oracle.variances[k][d])));
    }
    ds.labels.push_back(static_cast<int>(k));
  }
  return ds;
}

LabeledDataset gen_far_field(std::size_t dim, std::size_t num_classes, std::size_t n,
                             double inner, double outer, dist::SeededRng& rng) {
  if (!(inner >= 0.0 && outer > inner)) {
    throw std::invalid_argument("gen_far_field: need 0 <= inner < outer");
  }
  LabeledDataset ds;
  ds.dim = dim;
  ds.num_classes = num_classes;
  ds.provenance.origin = Origin::ood;
  std::vector<double> x(dim);
  for (std::size_t i = 0; i < n; ++i) {
    double biggest;
    do {
      biggest = 0.0;
      for (auto& v : x) {
        v = rng.uniform(-outer, outer);
        biggest = std::max(biggest, std::abs(v));
      }
    } while (biggest < inner);
    ds.features.insert(ds.features.end(), x.begin(), x.end());
    ds.labels.push_back(0);
  }
  return ds;
}

}  // namespace etp::data
