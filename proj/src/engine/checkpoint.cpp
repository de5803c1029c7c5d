#include "bsup/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "bsup/errors.hpp"

namespace bsup {

namespace {

constexpr char kMagic[4] = {'B', 'S', 'U', 'P'};

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  template <typename T>
  void little(T value) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::span<const std::uint8_t> bytes(std::size_t n) {
    if (in_.size() - pos_ < n) throw FormatError("checkpoint truncated at byte " + std::to_string(pos_));
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  template <typename T>
  T little() {
    auto b = bytes(sizeof(T));
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(static_cast<T>(b[i]) << (8 * i));
    return value;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace

Checkpoint make_checkpoint(std::uint16_t model_tag, std::span<const Parameter> params) {
  Checkpoint ckpt;
  ckpt.model_tag = model_tag;
  for (const Parameter& p : params) {
    StoredTensor t{p.id, p.tensor.shape(), {}};
    t.values.reserve(p.tensor.size());
    for (double v : p.tensor.data()) t.values.push_back(static_cast<float>(v));
    ckpt.tensors.push_back(std::move(t));
  }
  return ckpt;
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.little<std::uint16_t>(kCheckpointVersion);
  w.little<std::uint16_t>(ckpt.model_tag);
  w.little<std::uint32_t>(static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const StoredTensor& t : ckpt.tensors) {
    if (t.values.size() != t.shape.size()) throw ShapeError("stored tensor '" + t.id + "' has inconsistent size");
    w.little<std::uint32_t>(static_cast<std::uint32_t>(t.id.size()));
    w.bytes(t.id.data(), t.id.size());
    for (std::size_t extent : {t.shape.n, t.shape.c, t.shape.h, t.shape.w})
      w.little<std::uint32_t>(static_cast<std::uint32_t>(extent));
    for (float v : t.values) w.little<std::uint32_t>(std::bit_cast<std::uint32_t>(v));
  }
  return w.take();
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  auto magic = r.bytes(4);
  if (std::memcmp(magic.data(), kMagic, 4) != 0) throw FormatError("not a checkpoint file (bad magic)");
  const auto version = r.little<std::uint16_t>();
  if (version != kCheckpointVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  Checkpoint ckpt;
  ckpt.model_tag = r.little<std::uint16_t>();
  const auto count = r.little<std::uint32_t>();
  for (std::uint32_t k = 0; k < count; ++k) {
    StoredTensor t;
    const auto id_len = r.little<std::uint32_t>();
    auto id = r.bytes(id_len);
    t.id.assign(id.begin(), id.end());
    std::uint32_t dims[4];
    for (auto& d : dims) d = r.little<std::uint32_t>();
    t.shape = Shape{dims[0], dims[1], dims[2], dims[3]};
    if (t.shape.size() == 0) throw FormatError("checkpoint tensor '" + t.id + "' has a zero extent");
    t.values.resize(t.shape.size());
    for (float& v : t.values) v = std::bit_cast<float>(r.little<std::uint32_t>());
    ckpt.tensors.push_back(std::move(t));
  }
  if (!r.done()) throw FormatError("trailing bytes after checkpoint payload");
  return ckpt;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const auto bytes = encode_checkpoint(ckpt);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace bsup
