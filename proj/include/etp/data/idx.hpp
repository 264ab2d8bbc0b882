#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "etp/data/dataset.hpp"

namespace etp::data {

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

/// Malformed IDX input; `offset` is the byte position where parsing failed.
class IdxError : public std::runtime_error {
 public:
  IdxError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Parses a big-endian IDX image/label pair. Pixels are scaled to [0, 1] as
/// byte / 255; labels must be below num_classes.
LabeledDataset parse_idx(std::span<const std::uint8_t> images,
                         std::span<const std::uint8_t> labels, std::size_t num_classes = 10);

LabeledDataset read_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                        std::size_t num_classes = 10);

/// Inverse of parse_idx for datasets with an image shape and features that
/// are multiples of 1/255.
std::vector<std::uint8_t> encode_idx_images(const LabeledDataset& ds);
std::vector<std::uint8_t> encode_idx_labels(const LabeledDataset& ds);
void write_idx(const LabeledDataset& ds, const std::filesystem::path& images,
               const std::filesystem::path& labels);

}  // namespace etp::data
