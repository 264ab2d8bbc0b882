#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "etp/ad/tensor.hpp"

namespace etp::data {

enum class Origin { in_domain, ood, corrupted };

struct Provenance {
  Origin origin = Origin::in_domain;
  std::string corruption;  // set when origin == corrupted
  int severity = 0;

  std::string to_string() const;
  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct ImageShape {
  std::size_t rows = 0;
  std::size_t cols = 0;
  friend bool operator==(const ImageShape&, const ImageShape&) = default;
};

/// N x D feature matrix (row-major) with integer labels in [0, K).
struct LabeledDataset {
  std::size_t dim = 0;
  std::size_t num_classes = 0;
  std::vector<double> features;
  std::vector<int> labels;
  Provenance provenance;
  std::optional<ImageShape> image_shape;

  std::size_t size() const { return labels.size(); }
  std::span<const double> row(std::size_t i) const { return {features.data() + i * dim, dim}; }
  std::span<double> row(std::size_t i) { return {features.data() + i * dim, dim}; }

  /// Throws std::invalid_argument on inconsistent sizes, labels outside
  /// [0, K) or non-finite features.
  void validate() const;

  LabeledDataset subset(std::span<const std::size_t> indices) const;
  /// Rows `indices` as a |indices| x D tensor.
  ad::Tensor feature_tensor(std::span<const std::size_t> indices) const;
  ad::Tensor feature_tensor() const;
  std::vector<int> labels_at(std::span<const std::size_t> indices) const;
};

}  // namespace etp::data
