#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace etp::metrics {

/// N class-probability rows with their true labels and per-row predictive
/// entropy. Rows must lie on the simplex within 1e-6.
class PredictionSet {
 public:
  PredictionSet(std::size_t num_classes, std::vector<double> probs, std::vector<int> labels);

  std::size_t size() const { return labels_.size(); }
  std::size_t num_classes() const { return num_classes_; }
  std::span<const double> probs(std::size_t i) const {
    return {probs_.data() + i * num_classes_, num_classes_};
  }
  int label(std::size_t i) const { return labels_[i]; }
  const std::vector<int>& labels() const { return labels_; }
  const std::vector<double>& entropies() const { return entropy_; }

  /// Index of the largest probability (first one on ties).
  int predicted(std::size_t i) const;
  double confidence(std::size_t i) const;

 private:
  std::size_t num_classes_;
  std::vector<double> probs_;
  std::vector<int> labels_;
  std::vector<double> entropy_;
};

/// Shannon entropy in nats with 0 log 0 = 0.
double entropy(std::span<const double> probs);

/// Mean categorical NLL; *floored receives the number of clipped rows.
double nll(const PredictionSet& preds, std::size_t* floored = nullptr);

/// Fraction of rows whose argmax differs from the label.
double error_rate(const PredictionSet& preds);

/// Expected calibration error over `bins` right-closed confidence bins
/// ((m-1)/M, m/M] on the max class probability. Empty bins contribute 0.
double ece(const PredictionSet& preds, std::size_t bins = 10);

/// Bin index in [0, bins) for a confidence value, consistent with the
/// right-closed comparison ((m-1)/M < c <= m/M).
std::size_t ece_bin(double confidence, std::size_t bins);

/// P(out > in) + P(out == in) / 2, the exact Mann-Whitney AUROC with
/// out-of-domain scores as the positive class.
double auroc(std::span<const double> scores_in, std::span<const double> scores_out);

}  // namespace etp::metrics
