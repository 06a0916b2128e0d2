#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "dualarm/attention.hpp"

namespace dualarm {

namespace {

constexpr std::array<char, 4> kMagic{'D', 'A', 'R', 'W'};
constexpr std::uint8_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xffu));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  std::size_t offset() const { return pos_; }
  bool at_end() const { return pos_ == bytes_.size(); }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  void need(std::size_t count, const char* what) const {
    if (bytes_.size() - pos_ < count)
      throw WeightsError(WeightsErrorKind::Truncated, std::string("truncated weight file: ") + what +
                                                          " needs " + std::to_string(count) + " bytes at offset " +
                                                          std::to_string(pos_));
  }

  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + b])) << (8 * b);
    pos_ += 4;
    return v;
  }

  std::string take(std::size_t count, const char* what) {
    need(count, what);
    std::string s = bytes_.substr(pos_, count);
    pos_ += count;
    return s;
  }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  std::filesystem::path p = path;
  p += ".json";
  return p;
}

void save_weights(const std::filesystem::path& path, const WeightBundle& bundle, const NetworkConfig& config) {
  bundle.validate(config);
  std::string out(kMagic.begin(), kMagic.end());
  out.push_back(static_cast<char>(kVersion));
  put_u32(out, static_cast<std::uint32_t>(bundle.tensors.size()));
  for (const auto& [name, t] : bundle.tensors) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put_u32(out, static_cast<std::uint32_t>(t.shape.size()));
    for (auto dim : t.shape) put_u32(out, dim);
    for (float v : t.data) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw WeightsError(WeightsErrorKind::Io, "cannot write " + path.string());
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw WeightsError(WeightsErrorKind::Io, "write failed: " + path.string());

  std::ofstream side(sidecar_path(path), std::ios::trunc);
  if (!side) throw WeightsError(WeightsErrorKind::Io, "cannot write " + sidecar_path(path).string());
  side << to_json(config).dump(2) << '\n';
}

WeightBundle read_weight_file(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw WeightsError(WeightsErrorKind::Io, "cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());

  Reader in(bytes);
  const std::string magic = in.take(4, "magic");
  if (!std::equal(kMagic.begin(), kMagic.end(), magic.begin()))
    throw WeightsError(WeightsErrorKind::BadMagic, path.string() + ": not a DARW weight file");
  const auto version = static_cast<std::uint8_t>(in.take(1, "version")[0]);
  if (version != kVersion)
    throw WeightsError(WeightsErrorKind::BadVersion, "unsupported weight file version " + std::to_string(version));

  WeightBundle bundle;
  const std::uint32_t count = in.u32("tensor count");
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = in.u32("name length");
    std::string name = in.take(name_len, "tensor name");
    Tensor t;
    const std::uint32_t rank = in.u32("rank");
    if (rank > 8) throw WeightsError(WeightsErrorKind::ShapeMismatch, name + ": implausible rank " + std::to_string(rank));
    for (std::uint32_t r = 0; r < rank; ++r) t.shape.push_back(in.u32("dimension"));
    // Dimension products can overflow; bound them by what is left first.
    std::size_t numel = 1;
    for (auto dim : t.shape) {
      if (dim != 0 && numel > in.remaining() / 4 / dim) {
        in.need(in.remaining() + 1, "tensor data");
      }
      numel *= dim;
    }
    in.need(numel * 4, "tensor data");
    t.data.resize(numel);
    for (auto& v : t.data) {
      v = std::bit_cast<float>(in.u32("tensor data"));
      if (!std::isfinite(v)) throw WeightsError(WeightsErrorKind::NonFinite, name + ": non-finite value");
    }
    if (!bundle.tensors.emplace(std::move(name), std::move(t)).second)
      throw WeightsError(WeightsErrorKind::Unexpected, "duplicate tensor name");
  }
  if (!in.at_end())
    throw WeightsError(WeightsErrorKind::Unexpected, "trailing bytes after offset " + std::to_string(in.offset()));
  return bundle;
}

NetworkConfig read_sidecar(const std::filesystem::path& path) {
  std::ifstream side(sidecar_path(path));
  if (!side) throw WeightsError(WeightsErrorKind::Io, "missing sidecar " + sidecar_path(path).string());
  try {
    return network_config_from_json(nlohmann::json::parse(side));
  } catch (const nlohmann::json::exception& e) {
    throw WeightsError(WeightsErrorKind::Io, "bad sidecar: " + std::string(e.what()));
  } catch (const DomainError& e) {
    throw WeightsError(WeightsErrorKind::ShapeMismatch, "bad sidecar: " + std::string(e.what()));
  }
}

WeightBundle load_weights(const std::filesystem::path& path, const NetworkConfig& config) {
  WeightBundle bundle = read_weight_file(path);
  bundle.validate(config);
  return bundle;
}

}  // namespace dualarm
