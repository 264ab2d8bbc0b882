#include "etp/metrics/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "etp/dist/categorical.hpp"

namespace etp::metrics {

PredictionSet::PredictionSet(std::size_t num_classes, std::vector<double> probs,
                             std::vector<int> labels)
    : num_classes_(num_classes), probs_(std::move(probs)), labels_(std::move(labels)) {
  if (num_classes_ < 2) throw std::invalid_argument("PredictionSet needs at least two classes");
  if (probs_.size() != labels_.size() * num_classes_) {
    throw std::invalid_argument("PredictionSet: " + std::to_string(probs_.size()) +
                                " probabilities for " + std::to_string(labels_.size()) +
                                " labels and " + std::to_string(num_classes_) + " classes");
  }
  entropy_.resize(labels_.size());
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] < 0 || static_cast<std::size_t>(labels_[i]) >= num_classes_) {
      throw std::out_of_range("PredictionSet: label " + std::to_string(labels_[i]) +
                              " at row " + std::to_string(i) + " outside [0, " +
                              std::to_string(num_classes_) + ")");
    }
    double s = 0.0;
    for (double p : this->probs(i)) {
      if (!(p >= 0.0)) {
        throw std::invalid_argument("PredictionSet: negative or NaN probability at row " +
                                    std::to_string(i));
      }
      s += p;
    }
    if (std::abs(s - 1.0) > 1e-6) {
      throw std::invalid_argument("PredictionSet: row " + std::to_string(i) + " sums to " +
                                  std::to_string(s));
    }
    entropy_[i] = entropy(this->probs(i));
  }
}

int PredictionSet::predicted(std::size_t i) const {
  auto row = probs(i);
  return static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
}

double PredictionSet::confidence(std::size_t i) const {
  auto row = probs(i);
  return *std::max_element(row.begin(), row.end());
}

double entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return std::max(h, 0.0);
}

double nll(const PredictionSet& preds, std::size_t* floored) {
  if (preds.size() == 0) throw std::invalid_argument("nll of an empty prediction set");
  double total = 0.0;
  std::size_t clipped = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    bool f = false;
    total += dist::categorical_nll(preds.probs(i), preds.label(i), &f);
    clipped += f ? 1 : 0;
  }
  if (floored) *floored = clipped;
  return total / static_cast<double>(preds.size());
}

double error_rate(const PredictionSet& preds) {
  if (preds.size() == 0) throw std::invalid_argument("error rate of an empty prediction set");
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) wrong += preds.predicted(i) != preds.label(i);
  return static_cast<double>(wrong) / static_cast<double>(preds.size());
}

std::size_t ece_bin(double confidence, std::size_t bins) {
  const double M = static_cast<double>(bins);
  double m = std::ceil(confidence * M);
  m = std::clamp(m, 1.0, M);
  // Undo rounding in confidence * M so membership follows the comparisons.
  while (m > 1.0 && confidence <= (m - 1.0) / M) m -= 1.0;
  while (m < M && confidence > m / M) m += 1.0;
  return static_cast<std::size_t>(m) - 1;
}

double ece(const PredictionSet& preds, std::size_t bins) {
  if (bins == 0) throw std::invalid_argument("ece needs at least one bin");
  if (preds.size() == 0) return 0.0;
  std::vector<std::size_t> count(bins, 0);
  std::vector<double> correct(bins, 0.0);
  std::vector<double> conf(bins, 0.0);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double c = preds.confidence(i);
    const std::size_t b = ece_bin(c, bins);
    count[b] += 1;
    correct[b] += preds.predicted(i) == preds.label(i) ? 1.0 : 0.0;
    conf[b] += c;
  }
  const double n = static_cast<double>(preds.size());
  double total = 0.0;
  for (std::size_t b = 0; b < bins; ++b) {
    if (count[b] == 0) continue;
    const double nb = static_cast<double>(count[b]);
    total += nb / n * std::abs(correct[b] / nb - conf[b] / nb);
  }
  return total;
}

double auroc(std::span<const double> scores_in, std::span<const double> scores_out) {
  if (scores_in.empty() || scores_out.empty()) {
    throw std::invalid_argument("auroc needs non-empty in- and out-of-domain score lists");
  }
  struct Item {
    double score;
    bool out;
  };
  std::vector<Item> items;
  items.reserve(scores_in.size() + scores_out.size());
  for (double s : scores_in) items.push_back({s, false});
  for (double s : scores_out) items.push_back({s, true});
  std::sort(items.begin(), items.end(),
            [](const Item& a, const Item& b) { return a.score < b.score; });

  // Sum of 1-based average ranks of the out-of-domain scores.
  double rank_sum = 0.0;
  std::size_t i = 0;
  while (i < items.size()) {
    std::size_t j = i;
    while (j + 1 < items.size() && items[j + 1].score == items[i].score) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + j + 2);
    for (std::size_t t = i; t <= j; ++t) {
      if (items[t].out) rank_sum += avg_rank;
    }
    i = j + 1;
  }
  const double n_out = static_cast<double>(scores_out.size());
  const double n_in = static_cast<double>(scores_in.size());
  const double u = rank_sum - n_out * (n_out + 1.0) / 2.0;
  return u / (n_in * n_out);
}

}  // namespace etp::metrics
