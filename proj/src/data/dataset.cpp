#include "etp/data/dataset.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace etp::data {

std::string Provenance::to_string() const {
  switch (origin) {
    case Origin::in_domain:
      return "in-domain";
    case Origin::ood:
      return "ood";
    case Origin::corrupted:
      return "corrupted(" + corruption + "," + std::to_string(severity) + ")";
  }
  return "unknown";
}

void LabeledDataset::validate() const {
  if (dim == 0) throw std::invalid_argument("dataset feature dimension must be positive");
  if (features.size() != labels.size() * dim) {
    throw std::invalid_argument("dataset has " + std::to_string(features.size()) +
                                " feature values for " + std::to_string(labels.size()) +
                                " rows of dimension " + std::to_string(dim));
  }
  if (image_shape && image_shape->rows * image_shape->cols != dim) {
    throw std::invalid_argument("dataset image shape does not match feature dimension");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes) {
      throw std::invalid_argument("label " + std::to_string(labels[i]) + " at row " +
                                  std::to_string(i) + " outside [0, " +
                                  std::to_string(num_classes) + ")");
    }
  }
  for (double v : features) {
    if (!std::isfinite(v)) throw std::invalid_argument("dataset contains non-finite features");
  }
}

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> indices) const {
  LabeledDataset out;
  out.dim = dim;
  out.num_classes = num_classes;
  out.provenance = provenance;
  out.image_shape = image_shape;
  out.features.reserve(indices.size() * dim);
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= size()) throw std::out_of_range("subset index " + std::to_string(i));
    auto r = row(i);
    out.features.insert(out.features.end(), r.begin(), r.end());
    out.labels.push_back(labels[i]);
  }
  return out;
}

ad::Tensor LabeledDataset::feature_tensor(std::span<const std::size_t> indices) const {
  std::vector<double> values;
  values.reserve(indices.size() * dim);
  for (std::size_t i : indices) {
    auto r = row(i);
    values.insert(values.end(), r.begin(), r.end());
  }
  return ad::Tensor({indices.size(), dim}, std::move(values));
}

ad::Tensor LabeledDataset::feature_tensor() const {
  return ad::Tensor({size(), dim}, features);
}

std::vector<int> LabeledDataset::labels_at(std::span<const std::size_t> indices) const {
  std::vector<int> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(labels.at(i));
  return out;
}

}  // namespace etp::data
