#include "etp/data/iris.hpp"

#include <openssl/evp.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace etp::data {

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 computation failed");
  }
  std::string hex;
  hex.reserve(2 * len);
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

LabeledDataset parse_iris_table(std::string_view table, std::string_view expected_sha256) {
  const std::string actual = sha256_hex(table);
  if (actual != expected_sha256) {
    throw std::runtime_error("Iris table checksum mismatch: expected " +
                             std::string(expected_sha256) + ", got " + actual);
  }
  LabeledDataset ds;
  ds.dim = 4;
  ds.num_classes = 3;
  std::istringstream in{std::string(table)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string cell;
    for (int c = 0; c < 4; ++c) {
      std::getline(fields, cell, ',');
      ds.features.push_back(std::stod(cell));
    }
    std::getline(fields, cell, ',');
    ds.labels.push_back(std::stoi(cell));
  }
  ds.validate();
  return ds;
}

LabeledDataset load_iris_raw() { return parse_iris_table(kIrisTable, kIrisSha256); }

PcaProjection iris_pca2() {
  const LabeledDataset raw = load_iris_raw();
  const auto n = static_cast<Eigen::Index>(raw.size());
  Eigen::MatrixXd X(n, 4);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < 4; ++j) X(i, j) = raw.features[static_cast<std::size_t>(i * 4 + j)];
  X.rowwise() -= X.colwise().mean();
  const Eigen::MatrixXd cov = (X.transpose() * X) / static_cast<double>(n - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw std::runtime_error("Iris PCA eigen-solve failed");
  // Eigen returns ascending eigenvalues.
  Eigen::MatrixXd vecs = solver.eigenvectors().rowwise().reverse();
  Eigen::VectorXd vals = solver.eigenvalues().reverse();
  for (Eigen::Index c = 0; c < 4; ++c) {
    Eigen::Index arg = 0;
    vecs.col(c).cwiseAbs().maxCoeff(&arg);
    if (vecs(arg, c) < 0.0) vecs.col(c) *= -1.0;
  }

  PcaProjection out;
  for (int c = 0; c < 4; ++c) out.eigenvalues[static_cast<std::size_t>(c)] = vals(c);
  for (int c = 0; c < 2; ++c)
    for (int j = 0; j < 4; ++j)
      out.components[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)] = vecs(j, c);
  out.explained_variance_ratio = (vals(0) + vals(1)) / vals.sum();

  const Eigen::MatrixXd scores = X * vecs.leftCols(2);
  out.data.dim = 2;
  out.data.num_classes = 3;
  out.data.labels = raw.labels;
  out.data.features.resize(raw.size() * 2);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < 2; ++j)
      out.data.features[static_cast<std::size_t>(i * 2 + j)] = scores(i, j);
  return out;
}

LabeledDataset load_iris_pca2() { return iris_pca2().data; }

}  // namespace etp::data
