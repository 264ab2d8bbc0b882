#include "etp/models/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

#include "etp/dist/rng.hpp"

namespace etp::models {

namespace {

void put_le(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_tensor(std::vector<std::uint8_t>& out, const std::string& name, const ad::Tensor& t) {
  put_le(out, name.size(), 4);
  out.insert(out.end(), name.begin(), name.end());
  put_le(out, t.rank(), 4);
  for (std::size_t e : t.shape()) put_le(out, e, 8);
  for (double v : t.data()) put_le(out, std::bit_cast<std::uint64_t>(v), 8);
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  std::uint64_t le(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= std::uint64_t{bytes_[pos_ + static_cast<std::size_t>(i)]} << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(bytes_.begin() + static_cast<long>(pos_), bytes_.begin() + static_cast<long>(pos_ + n));
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) {
      throw CheckpointError("checkpoint truncated at byte " + std::to_string(pos_));
    }
  }
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Predictor& model, std::uint64_t seed) {
  std::vector<std::uint8_t> out(std::begin(kCheckpointMagic), std::end(kCheckpointMagic));
  put_le(out, kCheckpointVersion, 4);

  nlohmann::json meta;
  meta["config"] = model.config();
  meta["seed"] = seed;
  meta["rng"] = dist::SeededRng::kAlgorithm;
  const std::string text = meta.dump();
  put_le(out, text.size(), 4);
  out.insert(out.end(), text.begin(), text.end());

  const auto state = model.state();
  put_le(out, model.parameters().size() + state.size(), 4);
  for (const auto& p : model.parameters().params()) put_tensor(out, p.name, p.value);
  for (const auto& s : state) put_tensor(out, s.name, s.value);
  return out;
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  Reader in(bytes);
  if (in.str(sizeof kCheckpointMagic) != std::string(kCheckpointMagic, sizeof kCheckpointMagic)) {
    throw CheckpointError("not a checkpoint file (bad magic)");
  }
  const auto version = in.le(4);
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ck;
  try {
    const auto meta = nlohmann::json::parse(in.str(in.le(4)));
    ck.config = meta.at("config").get<ModelConfig>();
    ck.seed = meta.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("bad checkpoint metadata: ") + e.what());
  }

  dist::SeededRng init(ck.seed);
  ck.model = make_predictor(ck.config, init);
  std::map<std::string, bool> seen;
  for (const auto& p : ck.model->parameters().params()) seen[p.name] = false;

  const auto count = in.le(4);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::string name = in.str(in.le(4));
    const auto rank = in.le(4);
    if (rank == 0 || rank > 8) throw CheckpointError("tensor '" + name + "' has bad rank");
    ad::Shape shape;
    for (std::uint64_t r = 0; r < rank; ++r) shape.push_back(in.le(8));
    std::vector<double> values(ad::shape_size(shape));
    for (auto& v : values) v = std::bit_cast<double>(in.le(8));
    ad::Tensor t(shape, std::move(values));

    auto it = seen.find(name);
    if (it != seen.end()) {
      ad::Tensor& dst = ck.model->parameters().get(name);
      if (dst.shape() != t.shape()) {
        throw CheckpointError("tensor '" + name + "' has shape " + ad::to_string(t.shape()) +
                              ", expected " + ad::to_string(dst.shape()));
      }
      dst = std::move(t);
      it->second = true;
    } else {
      try {
        ck.model->restore_state(name, std::move(t));
      } catch (const std::exception& e) {
        throw CheckpointError(e.what());
      }
    }
  }
  for (const auto& [name, found] : seen) {
    if (!found) throw CheckpointError("checkpoint is missing parameter '" + name + "'");
  }
  if (!in.done()) throw CheckpointError("trailing bytes after checkpoint at " + std::to_string(in.pos()));
  return ck;
}

void save_checkpoint(const Predictor& model, std::uint64_t seed, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(model, seed);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError("write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return decode_checkpoint(bytes);
}

}  // namespace etp::models
