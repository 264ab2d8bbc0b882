#pragma once

#include <array>
#include <string>
#include <string_view>

#include "etp/data/dataset.hpp"

namespace etp::data {

/// Embedded 150 x 4 Iris table as CSV text (4 features + species index).
extern const char* const kIrisTable;
/// SHA-256 of kIrisTable, checked on every load.
inline constexpr std::string_view kIrisSha256 =
    "111f8932a62b6c883fdc21a018d7459e603d6468fd8bdb4d1e0f0b125f2c9f39";

std::string sha256_hex(std::string_view bytes);

/// The raw 4-feature table; throws std::runtime_error on checksum mismatch.
LabeledDataset load_iris_raw();
/// Parses an Iris-format CSV body after verifying its checksum against
/// `expected_sha256`.
LabeledDataset parse_iris_table(std::string_view table, std::string_view expected_sha256);

struct PcaProjection {
  LabeledDataset data;                   // N x 2 scores
  std::array<double, 4> eigenvalues;     // covariance spectrum, descending
  std::array<std::array<double, 4>, 2> components;
  double explained_variance_ratio = 0.0; // top-2 share of the trace
};

/// Centers the raw table and projects it onto the top two eigenvectors of
/// the sample covariance. Each eigenvector is sign-fixed so that its
/// largest-magnitude entry is positive.
PcaProjection iris_pca2();
LabeledDataset load_iris_pca2();

}  // namespace etp::data
