#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "etp/models/predictor.hpp"

namespace etp::models {

inline constexpr char kCheckpointMagic[8] = {'E', 'T', 'P', 'C', 'K', 'P', 'T', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Checkpoint {
  ModelConfig config;
  std::uint64_t seed = 0;
  std::unique_ptr<Predictor> model;
};

/// Byte layout is documented in docs/checkpoint-format.md. Tensors are
/// stored as raw little-endian IEEE doubles, so a round trip is bit-exact.
std::vector<std::uint8_t> encode_checkpoint(const Predictor& model, std::uint64_t seed);
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const Predictor& model, std::uint64_t seed, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace etp::models
