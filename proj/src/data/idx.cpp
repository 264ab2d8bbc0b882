#include "etp/data/idx.hpp"

#include <cmath>
#include <fstream>
#include <iterator>

namespace etp::data {
namespace {

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset,
                        const char* what) {
  if (offset + 4 > bytes.size()) {
    throw IdxError(std::string("truncated ") + what + " header", bytes.size());
  }
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void append_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IdxError("cannot open " + path.string(), 0);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spill(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace

LabeledDataset parse_idx(std::span<const std::uint8_t> images,
                         std::span<const std::uint8_t> labels, std::size_t num_classes) {
  const std::uint32_t img_magic = read_be32(images, 0, "image");
  if (img_magic != kIdxImageMagic) throw IdxError("bad image magic number", 0);
  const std::uint32_t count = read_be32(images, 4, "image");
  const std::uint32_t rows = read_be32(images, 8, "image");
  const std::uint32_t cols = read_be32(images, 12, "image");
  if (rows == 0 || cols == 0) throw IdxError("image dimensions must be positive", 8);

  const std::uint32_t lbl_magic = read_be32(labels, 0, "label");
  if (lbl_magic != kIdxLabelMagic) throw IdxError("bad label magic number", 0);
  const std::uint32_t label_count = read_be32(labels, 4, "label");
  if (label_count != count) {
    throw IdxError("label count " + std::to_string(label_count) + " does not match image count " +
                       std::to_string(count),
                   4);
  }

  const std::size_t pixels = std::size_t{rows} * cols;
  const std::size_t img_payload = 16 + std::size_t{count} * pixels;
  if (images.size() < img_payload) throw IdxError("truncated image payload", images.size());
  if (labels.size() < 8 + std::size_t{count}) {
    throw IdxError("truncated label payload", labels.size());
  }

  LabeledDataset ds;
  ds.dim = pixels;
  ds.num_classes = num_classes;
  ds.image_shape = ImageShape{rows, cols};
  ds.features.resize(std::size_t{count} * pixels);
  ds.labels.resize(count);
  for (std::size_t i = 0; i < ds.features.size(); ++i) {
    ds.features[i] = static_cast<double>(images[16 + i]) / 255.0;
  }
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint8_t y = labels[8 + i];
    if (y >= num_classes) {
      throw IdxError("label " + std::to_string(y) + " outside [0, " +
                         std::to_string(num_classes) + ")",
                     8 + i);
    }
    ds.labels[i] = y;
  }
  return ds;
}

LabeledDataset read_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                        std::size_t num_classes) {
  const auto img = slurp(images);
  const auto lbl = slurp(labels);
  return parse_idx(img, lbl, num_classes);
}

std::vector<std::uint8_t> encode_idx_images(const LabeledDataset& ds) {
  if (!ds.image_shape) throw std::invalid_argument("encode_idx_images: dataset has no image shape");
  std::vector<std::uint8_t> out;
  out.reserve(16 + ds.features.size());
  append_be32(out, kIdxImageMagic);
  append_be32(out, static_cast<std::uint32_t>(ds.size()));
  append_be32(out, static_cast<std::uint32_t>(ds.image_shape->rows));
  append_be32(out, static_cast<std::uint32_t>(ds.image_shape->cols));
  for (double v : ds.features) {
    const double scaled = std::round(v * 255.0);
    if (!(scaled >= 0.0 && scaled <= 255.0)) {
      throw std::invalid_argument("encode_idx_images: pixel value outside [0, 1]");
    }
    out.push_back(static_cast<std::uint8_t>(scaled));
  }
  return out;
}

std::vector<std::uint8_t> encode_idx_labels(const LabeledDataset& ds) {
  std::vector<std::uint8_t> out;
  out.reserve(8 + ds.size());
  append_be32(out, kIdxLabelMagic);
  append_be32(out, static_cast<std::uint32_t>(ds.size()));
  for (int y : ds.labels) {
    if (y < 0 || y > 255) throw std::invalid_argument("encode_idx_labels: label does not fit a byte");
    out.push_back(static_cast<std::uint8_t>(y));
  }
  return out;
}

void write_idx(const LabeledDataset& ds, const std::filesystem::path& images,
               const std::filesystem::path& labels) {
  spill(images, encode_idx_images(ds));
  spill(labels, encode_idx_labels(ds));
}

}  // namespace etp::data
