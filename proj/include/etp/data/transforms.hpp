#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "etp/data/dataset.hpp"
#include "etp/dist/rng.hpp"

namespace etp::data {

struct ZScoreStats {
  std::vector<double> mean;
  std::vector<double> sd;  // population sd; 1 where the train feature is constant
  std::size_t zero_variance_features = 0;
};

/// Computes per-feature statistics on `train` and applies them in place to
/// `train` and every dataset in `others`.
ZScoreStats zscore(LabeledDataset& train, std::span<LabeledDataset* const> others = {});
void apply_zscore(LabeledDataset& ds, const ZScoreStats& stats);

enum class CorruptionKind { gaussian_noise, impulse_noise, box_blur, contrast };

inline constexpr int kMaxSeverity = 5;
// Indexed by severity; entry 0 is the identity.
inline constexpr std::array<double, 6> kGaussianNoiseSd = {0.0, 0.08, 0.12, 0.18, 0.26, 0.38};
inline constexpr std::array<double, 6> kImpulseFraction = {0.0, 0.03, 0.06, 0.09, 0.17, 0.27};
inline constexpr std::array<int, 6> kBoxBlurRadius = {0, 1, 2, 3, 4, 5};
inline constexpr std::array<double, 6> kContrastFactor = {1.0, 0.4, 0.3, 0.2, 0.1, 0.05};

std::string_view to_string(CorruptionKind kind);
/// Accepts the hyphenated names ("gaussian-noise", ...); throws
/// std::invalid_argument otherwise.
CorruptionKind parse_corruption_kind(std::string_view name);

struct CorruptionSpec {
  CorruptionKind kind = CorruptionKind::gaussian_noise;
  int severity = 0;
};

/// Returns a corrupted copy. Severity 0 leaves features bitwise identical.
/// Image datasets are clipped to [0, 1] and use 0/1 as impulse values;
/// other datasets use per-feature min/max. Box blur requires an image shape.
LabeledDataset corrupt(const LabeledDataset& ds, const CorruptionSpec& spec,
                       dist::SeededRng& rng);

/// Shuffles once and cuts consecutive blocks. Fractions must be positive and
/// sum to 1 within 1e-9; the last split absorbs rounding.
std::vector<LabeledDataset> split(const LabeledDataset& ds, std::span<const double> fractions,
                                  dist::SeededRng& rng);

/// Per-epoch minibatch order. Epoch e is shuffled with rng.derive(e), so the
/// order is independent of how many epochs were drawn before.
class BatchSchedule {
 public:
  BatchSchedule(std::size_t n, std::size_t batch_size, const dist::SeededRng& rng);

  std::vector<std::vector<std::size_t>> epoch(std::uint64_t e) const;
  std::size_t batch_size() const { return batch_size_; }
  std::size_t num_batches() const { return (n_ + batch_size_ - 1) / batch_size_; }
  /// True when the requested batch size exceeded n and was reduced to n.
  bool clamped() const { return clamped_; }

 private:
  std::size_t n_;
  std::size_t batch_size_;
  bool clamped_ = false;
  dist::SeededRng rng_;
};

}  // namespace etp::data
