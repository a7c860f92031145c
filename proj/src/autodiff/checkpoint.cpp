#include "genctx/autodiff/checkpoint.h"

#include <fmt/format.h>
#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cstring>

#include "genctx/io.h"

namespace genctx::ad {

namespace {

void put_u8(std::string& out, std::uint8_t v) { out.push_back(static_cast<char>(v)); }

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  Reader(const std::string& bytes, std::size_t end) : bytes_(bytes), end_(end) {}

  std::uint64_t uint(int width) {
    need(width);
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += width;
    return v;
  }

  std::string string(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == end_; }
  std::size_t remaining() const { return end_ - pos_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > end_) throw IntegrityError("tensor archive is truncated");
  }
  const std::string& bytes_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

}  // namespace

std::uint32_t crc32_of(const std::string& bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size()));
  return static_cast<std::uint32_t>(crc);
}

void TensorArchive::add(std::string name, const Tensor& t) {
  entries.emplace_back(std::move(name),
                       StoredTensor{t.shape(), {t.values().begin(), t.values().end()}});
}

const StoredTensor& TensorArchive::get(const std::string& name) const {
  for (const auto& [n, t] : entries) {
    if (n == name) return t;
  }
  throw std::out_of_range(fmt::format("archive has no tensor '{}'", name));
}

bool TensorArchive::contains(const std::string& name) const {
  return std::any_of(entries.begin(), entries.end(), [&](const auto& e) { return e.first == name; });
}

std::string TensorArchive::serialize() const {
  std::string out(kMagic, 4);
  put_u8(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(metadata.size()));
  out += metadata;
  put_u32(out, static_cast<std::uint32_t>(entries.size()));
  for (const auto& [name, t] : entries) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put_u32(out, static_cast<std::uint32_t>(t.shape.size()));
    for (std::size_t d : t.shape) put_u64(out, d);
    for (double v : t.values) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  put_u32(out, crc32_of(out));
  return out;
}

TensorArchive TensorArchive::deserialize(const std::string& bytes) {
  if (bytes.size() < 4 + 1 + 4 + 4 + 4) throw IntegrityError("tensor archive is truncated");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw IntegrityError("not a tensor archive (bad magic)");
  const auto version = static_cast<std::uint8_t>(bytes[4]);
  if (version != kVersion) {
    throw FormatVersionError(
        fmt::format("tensor archive version {} is not supported (expected {})", version, kVersion));
  }
  const std::size_t body = bytes.size() - 4;
  const std::string trailer_bytes = bytes.substr(body);
  Reader trailer(trailer_bytes, 4);
  const auto stored_crc = static_cast<std::uint32_t>(trailer.uint(4));
  if (crc32_of(bytes.substr(0, body)) != stored_crc) {
    throw IntegrityError("tensor archive checksum mismatch (truncated or corrupted)");
  }

  Reader r(bytes, body);
  r.string(5);
  TensorArchive archive;
  archive.metadata = r.string(r.uint(4));
  const std::uint64_t count = r.uint(4);
  for (std::uint64_t e = 0; e < count; ++e) {
    std::string name = r.string(r.uint(4));
    StoredTensor t;
    const std::uint64_t rank = r.uint(4);
    if (rank > r.remaining() / 8) throw IntegrityError("tensor archive entry has an impossible rank");
    std::uint64_t numel = 1;
    for (std::uint64_t i = 0; i < rank; ++i) {
      t.shape.push_back(r.uint(8));
      // Bound by the bytes left so a corrupt shape cannot request a huge buffer.
      if (t.shape.back() != 0 && numel > r.remaining() / t.shape.back()) {
        throw IntegrityError("tensor archive entry is larger than the file");
      }
      numel *= t.shape.back();
    }
    if (numel > r.remaining() / 8) throw IntegrityError("tensor archive entry is larger than the file");
    t.values.resize(numel);
    for (double& v : t.values) v = std::bit_cast<double>(r.uint(8));
    archive.entries.emplace_back(std::move(name), std::move(t));
  }
  if (!r.done()) throw IntegrityError("tensor archive has trailing bytes");
  return archive;
}

void TensorArchive::save(const std::filesystem::path& path) const { write_file_atomic(path, serialize()); }

TensorArchive TensorArchive::load(const std::filesystem::path& path) { return deserialize(read_file(path)); }

void restore_parameters(const TensorArchive& archive, ParameterStore& store,
                        const std::string& prefix) {
  for (const auto& [name, tensor] : store.with_prefix(prefix)) {
    const StoredTensor& stored = archive.get(name);
    if (stored.shape != tensor.shape()) {
      throw ShapeError(fmt::format("checkpoint tensor '{}' has shape {}, model expects {}", name,
                                   shape_string(stored.shape), shape_string(tensor.shape())));
    }
    Tensor t = tensor;
    std::copy(stored.values.begin(), stored.values.end(), t.mutable_values().begin());
  }
}

void archive_parameters(const ParameterStore& store, TensorArchive& archive,
                        const std::string& prefix) {
  for (const auto& [name, tensor] : store.with_prefix(prefix)) archive.add(name, tensor);
}

}  // namespace genctx::ad
