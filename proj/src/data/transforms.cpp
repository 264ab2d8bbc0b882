#include "etp/data/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <stdexcept>

namespace etp::data {

ZScoreStats zscore(LabeledDataset& train, std::span<LabeledDataset* const> others) {
  if (train.size() == 0) throw std::invalid_argument("zscore: train set is empty");
  const std::size_t n = train.size();
  const std::size_t d = train.dim;
  ZScoreStats stats;
  stats.mean.assign(d, 0.0);
  stats.sd.assign(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) stats.mean[j] += train.features[i * d + j];
  for (auto& m : stats.mean) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double c = train.features[i * d + j] - stats.mean[j];
      stats.sd[j] += c * c;
    }
  }
  for (auto& s : stats.sd) {
    s = std::sqrt(s / static_cast<double>(n));
    if (!(s > 0.0)) {
      s = 1.0;
      ++stats.zero_variance_features;
    }
  }
  apply_zscore(train, stats);
  for (LabeledDataset* ds : others) {
    if (ds->dim != d) throw std::invalid_argument("zscore: dimension mismatch with train set");
    apply_zscore(*ds, stats);
  }
  return stats;
}

void apply_zscore(LabeledDataset& ds, const ZScoreStats& stats) {
  const std::size_t d = ds.dim;
  for (std::size_t i = 0; i < ds.size(); ++i)
    for (std::size_t j = 0; j < d; ++j) {
      double& v = ds.features[i * d + j];
      v = (v - stats.mean[j]) / stats.sd[j];
    }
}

std::string_view to_string(CorruptionKind kind) {
  switch (kind) {
    case CorruptionKind::gaussian_noise:
      return "gaussian-noise";
    case CorruptionKind::impulse_noise:
      return "impulse-noise";
    case CorruptionKind::box_blur:
      return "box-blur";
    case CorruptionKind::contrast:
      return "contrast";
  }
  return "unknown";
}

CorruptionKind parse_corruption_kind(std::string_view name) {
  for (auto k : {CorruptionKind::gaussian_noise, CorruptionKind::impulse_noise,
                 CorruptionKind::box_blur, CorruptionKind::contrast}) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown corruption kind '" + std::string(name) + "'");
}

namespace {

void clip_unit(LabeledDataset& ds) {
  for (auto& v : ds.features) v = std::clamp(v, 0.0, 1.0);
}

void box_blur(LabeledDataset& ds, int radius) {
  const auto rows = static_cast<long>(ds.image_shape->rows);
  const auto cols = static_cast<long>(ds.image_shape->cols);
  std::vector<double> src(ds.dim);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    auto img = ds.row(i);
    std::copy(img.begin(), img.end(), src.begin());
    // Edge pixels replicate outward.
    for (long r = 0; r < rows; ++r) {
      for (long c = 0; c < cols; ++c) {
        double acc = 0.0;
        for (long dr = -radius; dr <= radius; ++dr) {
          const long rr = std::clamp(r + dr, 0L, rows - 1);
          for (long dc = -radius; dc <= radius; ++dc) {
            const long cc = std::clamp(c + dc, 0L, cols - 1);
            acc += src[static_cast<std::size_t>(rr * cols + cc)];
          }
        }
        const double width = 2.0 * radius + 1.0;
        img[static_cast<std::size_t>(r * cols + c)] = acc / (width * width);
      }
    }
  }
}

}  // namespace

LabeledDataset corrupt(const LabeledDataset& ds, const CorruptionSpec& spec,
                       dist::SeededRng& rng) {
  if (spec.severity < 0 || spec.severity > kMaxSeverity) {
    throw std::invalid_argument("corruption severity " + std::to_string(spec.severity) +
                                " outside [0, " + std::to_string(kMaxSeverity) + "]");
  }
  if (spec.kind == CorruptionKind::box_blur && !ds.image_shape) {
    throw std::invalid_argument("box-blur requires an image dataset");
  }
  LabeledDataset out = ds;
  out.provenance.origin = Origin::corrupted;
  out.provenance.corruption = std::string(to_string(spec.kind));
  out.provenance.severity = spec.severity;
  if (spec.severity == 0) return out;

  const auto s = static_cast<std::size_t>(spec.severity);
  const bool image = ds.image_shape.has_value();
  const std::size_t d = ds.dim;

  switch (spec.kind) {
    case CorruptionKind::gaussian_noise: {
      const double sd = kGaussianNoiseSd[s];
      for (auto& v : out.features) v += rng.normal(0.0, sd);
      if (image) clip_unit(out);
      break;
    }
    case CorruptionKind::impulse_noise: {
      std::vector<double> lo(d, 0.0), hi(d, 1.0);
      if (!image && ds.size() > 0) {
        for (std::size_t j = 0; j < d; ++j) {
          lo[j] = hi[j] = ds.features[j];
          for (std::size_t i = 1; i < ds.size(); ++i) {
            lo[j] = std::min(lo[j], ds.features[i * d + j]);
            hi[j] = std::max(hi[j], ds.features[i * d + j]);
          }
        }
      }
      const double frac = kImpulseFraction[s];
      for (std::size_t i = 0; i < out.size(); ++i) {
        for (std::size_t j = 0; j < d; ++j) {
          if (rng.uniform() < frac) {
            out.features[i * d + j] = rng.uniform() < 0.5 ? lo[j] : hi[j];
          }
        }
      }
      break;
    }
    case CorruptionKind::box_blur:
      box_blur(out, kBoxBlurRadius[s]);
      break;
    case CorruptionKind::contrast: {
      const double factor = kContrastFactor[s];
      if (image) {
        for (std::size_t i = 0; i < out.size(); ++i) {
          auto img = out.row(i);
          const double m = std::accumulate(img.begin(), img.end(), 0.0) / static_cast<double>(d);
          for (auto& v : img) v = (v - m) * factor + m;
        }
      } else if (out.size() > 0) {
        for (std::size_t j = 0; j < d; ++j) {
          double m = 0.0;
          for (std::size_t i = 0; i < out.size(); ++i) m += out.features[i * d + j];
          m /= static_cast<double>(out.size());
          for (std::size_t i = 0; i < out.size(); ++i) {
            double& v = out.features[i * d + j];
            v = (v - m) * factor + m;
          }
        }
      }
      break;
    }
  }
  return out;
}

std::vector<LabeledDataset> split(const LabeledDataset& ds, std::span<const double> fractions,
                                  dist::SeededRng& rng) {
  if (fractions.empty()) throw std::invalid_argument("split: no fractions given");
  double total = 0.0;
  for (double f : fractions) {
    if (!(f > 0.0)) throw std::invalid_argument("split: fractions must be positive");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("split: fractions must sum to 1");

  const std::vector<std::size_t> order = dist::permutation(ds.size(), rng);
  std::vector<LabeledDataset> parts;
  std::size_t start = 0;
  double cumulative = 0.0;
  for (std::size_t p = 0; p < fractions.size(); ++p) {
    cumulative += fractions[p];
    const std::size_t end =
        p + 1 == fractions.size()
            ? ds.size()
            : std::min(ds.size(), static_cast<std::size_t>(
                                      std::llround(cumulative * static_cast<double>(ds.size()))));
    parts.push_back(ds.subset(std::span(order).subspan(start, end - start)));
    start = end;
  }
  return parts;
}

BatchSchedule::BatchSchedule(std::size_t n, std::size_t batch_size, const dist::SeededRng& rng)
    : n_(n), batch_size_(batch_size), rng_(rng) {
  if (n == 0) throw std::invalid_argument("BatchSchedule: empty dataset");
  if (batch_size == 0) throw std::invalid_argument("BatchSchedule: batch size must be positive");
  if (batch_size > n) {
    std::cerr << "warning: batch size " << batch_size << " exceeds split size " << n
              << "; using a single full batch\n";
    batch_size_ = n;
    clamped_ = true;
  }
}

std::vector<std::vector<std::size_t>> BatchSchedule::epoch(std::uint64_t e) const {
  dist::SeededRng epoch_rng = rng_.derive(e);
  const std::vector<std::size_t> order = dist::permutation(n_, epoch_rng);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < n_; start += batch_size_) {
    const std::size_t end = std::min(n_, start + batch_size_);
    batches.emplace_back(order.begin() + static_cast<long>(start),
                         order.begin() + static_cast<long>(end));
  }
  return batches;
}

}  // namespace etp::data
