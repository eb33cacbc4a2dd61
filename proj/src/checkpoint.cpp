#include "hdrfuse/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace hdr {
namespace {

class Writer {
 public:
  template <typename U>
  void put(U v) {
    static_assert(std::is_trivially_copyable_v<U>);
    unsigned char raw[sizeof(U)];
    std::memcpy(raw, &v, sizeof(U));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(U));
    bytes.insert(bytes.end(), raw, raw + sizeof(U));
  }
  void put_bytes(const std::string& s) { bytes.insert(bytes.end(), s.begin(), s.end()); }
  std::vector<unsigned char> bytes;
};

class Reader {
 public:
  explicit Reader(const std::vector<unsigned char>& b) : bytes_(b) {}
  template <typename U>
  U get() {
    need(sizeof(U));
    unsigned char raw[sizeof(U)];
    std::memcpy(raw, bytes_.data() + pos_, sizeof(U));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(U));
    pos_ += sizeof(U);
    U v;
    std::memcpy(&v, raw, sizeof(U));
    return v;
  }
  std::string get_string(std::size_t n) {
    need(n);
    std::string s(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_),
                  bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw IoError("truncated checkpoint");
  }
  const std::vector<unsigned char>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

template <typename T>
std::vector<unsigned char> serialize_checkpoint(const ModelParams<T>& params) {
  Writer w;
  w.put_bytes(std::string(kCheckpointMagic, 4));
  w.put<std::uint16_t>(kCheckpointVersion);
  w.put<double>(params.config.width_multiplier);
  w.put<std::uint64_t>(params.batchnorm_updates());
  const auto arch = params.architecture();
  w.put<std::uint32_t>(static_cast<std::uint32_t>(arch.size()));
  for (const auto& l : arch) {
    w.put<std::uint8_t>(static_cast<std::uint8_t>(l.kind));
    w.put<std::uint32_t>(l.in_channels);
    w.put<std::uint32_t>(l.out_channels);
  }
  const auto tensors = params.named_tensors();
  w.put<std::uint32_t>(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    w.put<std::uint16_t>(static_cast<std::uint16_t>(name.size()));
    w.put_bytes(name);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(t->rank()));
    for (std::size_t d : t->shape()) w.put<std::uint32_t>(static_cast<std::uint32_t>(d));
    for (std::size_t i = 0; i < t->size(); ++i) w.put<float>(static_cast<float>((*t)[i]));
  }
  return std::move(w.bytes);
}

template <typename T>
ModelParams<T> deserialize_checkpoint(const std::vector<unsigned char>& bytes) {
  Reader r(bytes);
  if (r.get_string(4) != std::string(kCheckpointMagic, 4)) throw IoError("not an HDRW checkpoint");
  const auto version = r.get<std::uint16_t>();
  if (version != kCheckpointVersion) throw IoError("unsupported checkpoint version " + std::to_string(version));
  ModelConfig cfg;
  cfg.width_multiplier = r.get<double>();
  if (!(cfg.width_multiplier > 0.0 && cfg.width_multiplier <= 1.0)) {
    throw IoError("checkpoint width multiplier out of range");
  }
  const auto bn_updates = r.get<std::uint64_t>();
  ModelParams<T> params = build_model<T>(cfg, 0);
  params.set_batchnorm_updates(bn_updates);

  const auto n_layers = r.get<std::uint32_t>();
  if (n_layers != params.architecture().size()) throw IoError("checkpoint layer count mismatch");
  std::vector<nn::LayerSpec> arch(n_layers);
  for (auto& l : arch) {
    l.kind = static_cast<nn::LayerKind>(r.get<std::uint8_t>());
    l.in_channels = r.get<std::uint32_t>();
    l.out_channels = r.get<std::uint32_t>();
  }
  if (arch != params.architecture()) throw IoError("checkpoint architecture does not match its width multiplier");

  auto tensors = params.named_tensors();
  if (r.get<std::uint32_t>() != tensors.size()) throw IoError("checkpoint tensor count mismatch");
  for (auto& [name, t] : tensors) {
    const auto len = r.get<std::uint16_t>();
    if (r.get_string(len) != name) throw IoError("checkpoint tensor order mismatch at " + name);
    const auto rank = r.get<std::uint8_t>();
    nn::Shape shape(rank);
    for (auto& d : shape) d = r.get<std::uint32_t>();
    if (shape != t->shape()) throw IoError("checkpoint shape mismatch for " + name);
    for (std::size_t i = 0; i < t->size(); ++i) (*t)[i] = static_cast<T>(r.get<float>());
  }
  if (!r.done()) throw IoError("trailing bytes in checkpoint");
  return params;
}

template <typename T>
void save_checkpoint(const ModelParams<T>& params, const std::filesystem::path& path) {
  const auto bytes = serialize_checkpoint(params);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing checkpoint " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw IoError("cannot move checkpoint into place: " + ec.message());
  }
}

template <typename T>
ModelParams<T> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return deserialize_checkpoint<T>(bytes);
}

template std::vector<unsigned char> serialize_checkpoint(const ModelParams<float>&);
template std::vector<unsigned char> serialize_checkpoint(const ModelParams<double>&);
template ModelParams<float> deserialize_checkpoint(const std::vector<unsigned char>&);
template ModelParams<double> deserialize_checkpoint(const std::vector<unsigned char>&);
template void save_checkpoint(const ModelParams<float>&, const std::filesystem::path&);
template void save_checkpoint(const ModelParams<double>&, const std::filesystem::path&);
template ModelParams<float> load_checkpoint(const std::filesystem::path&);
template ModelParams<double> load_checkpoint(const std::filesystem::path&);

}  // namespace hdr
