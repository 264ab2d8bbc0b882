#pragma once

#include <cstddef>

#include "etp/data/dataset.hpp"
#include "etp/dist/rng.hpp"
#include "etp/metrics/oracle.hpp"

namespace etp::data {

struct SyntheticTask {
  LabeledDataset data;
  metrics::MixtureOracle oracle;
};

/// The oracle of the 1-D two-class task: N(-1, 1) vs N(+1, 1), equal priors.
metrics::MixtureOracle two_gaussians_oracle();

/// n_per_class points from each class, class 0 first.
SyntheticTask gen_two_gaussians(std::size_t n_per_class, dist::SeededRng& rng);

/// n points from the oracle's generative process (label from the priors,
/// then features from that class).
LabeledDataset sample_from_oracle(const metrics::MixtureOracle& oracle, std::size_t n,
                                  dist::SeededRng& rng);

/// Out-of-domain probe set: points uniform in [-outer, outer]^D whose
/// largest coordinate magnitude is at least `inner`. Labels are 0.
LabeledDataset gen_far_field(std::size_t dim, std::size_t num_classes, std::size_t n,
                             double inner, double outer, dist::SeededRng& rng);

}  // namespace etp::data
