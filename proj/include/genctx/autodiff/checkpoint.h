#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "genctx/autodiff/nn.h"
#include "genctx/autodiff/tensor.h"

namespace genctx::ad {

/// Binary tensor container.
///
/// Layout (all integers little-endian):
///   magic "GCTX" | version u8 | metadata length u32 | metadata bytes (UTF-8)
///   | entry count u32 | entries | crc32 u32 of every preceding byte
/// Entry: name length u32 | name | rank u32 | dims u64[rank] | values f64[numel]
struct StoredTensor {
  Shape shape;
  std::vector<double> values;

  bool operator==(const StoredTensor&) const = default;
};

struct TensorArchive {
  static constexpr char kMagic[4] = {'G', 'C', 'T', 'X'};
  static constexpr std::uint8_t kVersion = 1;

  std::string metadata;
  std::vector<std::pair<std::string, StoredTensor>> entries;

  void add(std::string name, const Tensor& t);
  const StoredTensor& get(const std::string& name) const;
  bool contains(const std::string& name) const;

  std::string serialize() const;
  /// Throws IntegrityError (truncated, bad checksum, bad magic) or FormatVersionError.
  static TensorArchive deserialize(const std::string& bytes);

  void save(const std::filesystem::path& path) const;
  static TensorArchive load(const std::filesystem::path& path);

  bool operator==(const TensorArchive&) const = default;
};

/// Copies archived values into the store's parameters (names and shapes must match).
void restore_parameters(const TensorArchive& archive, ParameterStore& store,
                        const std::string& prefix = "");
void archive_parameters(const ParameterStore& store, TensorArchive& archive,
                        const std::string& prefix = "");

std::uint32_t crc32_of(const std::string& bytes);

}  // namespace genctx::ad
