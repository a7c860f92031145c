#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "genctx/autodiff/checkpoint.h"
#include "genctx/io.h"
#include "support/gen.h"

namespace genctx::ad {
namespace {

using testing::random_tensor;
using testing::TempDir;

TensorArchive sample_archive(std::uint64_t seed) {
  Rng rng(seed);
  TensorArchive a;
  a.metadata = R"({"variant":"baseline","seed":)" + std::to_string(seed) + "}";
  a.add("enc.weight", random_tensor(rng, {3, 4}));
  a.add("enc.bias", random_tensor(rng, {4}));
  a.add("scalar", Tensor::scalar(rng.normal()));
  a.add("empty", Tensor::zeros({0, 5}));
  return a;
}

// Rewrites the trailing checksum so corruption reaches the parser.
std::string restamp(std::string bytes) {
  bytes.resize(bytes.size() - 4);
  const std::uint32_t crc = crc32_of(bytes);
  for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<char>((crc >> (8 * i)) & 0xff));
  return bytes;
}

TEST(Checkpoint, RoundTripIsExact) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const TensorArchive a = sample_archive(seed);
    EXPECT_EQ(TensorArchive::deserialize(a.serialize()), a);
  }
}

TEST(Checkpoint, PreservesSpecialValuesBitwise) {
  TensorArchive a;
  a.add("special", Tensor::vector({-0.0, std::numeric_limits<double>::denorm_min(),
                                   std::numeric_limits<double>::infinity(), 1e308}));
  const TensorArchive b = TensorArchive::deserialize(a.serialize());
  EXPECT_TRUE(std::signbit(b.get("special").values[0]));
  EXPECT_EQ(b.get("special").values[1], std::numeric_limits<double>::denorm_min());
  EXPECT_TRUE(std::isinf(b.get("special").values[2]));
}

TEST(Checkpoint, FileRoundTrip) {
  TempDir dir("ckpt");
  const TensorArchive a = sample_archive(3);
  a.save(dir / "model.ckpt");
  EXPECT_EQ(TensorArchive::load(dir / "model.ckpt"), a);
  EXPECT_THROW(TensorArchive::load(dir / "missing.ckpt"), IoError);
}

TEST(Checkpoint, EveryTruncationIsRejected) {
  const std::string bytes = sample_archive(4).serialize();
  for (std::size_t n = 0; n < bytes.size(); ++n) {
    EXPECT_THROW(TensorArchive::deserialize(bytes.substr(0, n)), IntegrityError) << "length " << n;
  }
}

TEST(Checkpoint, BadMagic) {
  std::string bytes = sample_archive(5).serialize();
  bytes[0] = 'X';
  EXPECT_THROW(TensorArchive::deserialize(bytes), IntegrityError);
}

TEST(Checkpoint, UnknownVersion) {
  std::string bytes = sample_archive(6).serialize();
  bytes[4] = 9;
  EXPECT_THROW(TensorArchive::deserialize(restamp(bytes)), FormatVersionError);
}

TEST(Checkpoint, ChecksumCatchesEverySingleByteFlip) {
  const std::string bytes = sample_archive(7).serialize();
  for (std::size_t i = 5; i < bytes.size(); ++i) {
    std::string bad = bytes;
    bad[i] = static_cast<char>(bad[i] ^ 0x5a);
    EXPECT_THROW(TensorArchive::deserialize(bad), IntegrityError) << "byte " << i;
  }
}

TEST(Checkpoint, CorruptionWithValidChecksumNeverCrashes) {
  const std::string bytes = sample_archive(8).serialize();
  Rng rng(8);
  for (int trial = 0; trial < 2000; ++trial) {
    std::string bad = bytes;
    const int flips = 1 + static_cast<int>(rng.below(4));
    for (int f = 0; f < flips; ++f) bad[5 + rng.below(bad.size() - 9)] = static_cast<char>(rng.below(256));
    try {
      TensorArchive::deserialize(restamp(bad));
    } catch (const IntegrityError&) {
    } catch (const FormatVersionError&) {
    }
  }
}

TEST(Checkpoint, TrailingBytesRejected) {
  std::string bytes = sample_archive(9).serialize();
  bytes.resize(bytes.size() - 4);
  bytes += "junk";
  EXPECT_THROW(TensorArchive::deserialize(restamp(bytes + "1234")), IntegrityError);
}

TEST(Checkpoint, RestoreParametersCopiesValues) {
  ParameterStore src(1), dst(2);
  LinearParams::create(src, "lin", 3, 2);
  LinearParams::create(dst, "lin", 3, 2);
  TensorArchive a;
  archive_parameters(src, a);
  restore_parameters(a, dst);
  for (std::size_t k = 0; k < src.parameters().size(); ++k) {
    const auto& s = src.parameters()[k].tensor;
    const auto& d = dst.parameters()[k].tensor;
    for (std::size_t i = 0; i < s.numel(); ++i) EXPECT_EQ(s[i], d[i]);
  }
}

TEST(Checkpoint, RestoreRejectsShapeMismatchAndMissingNames) {
  ParameterStore src(1), wide(2), other(3);
  LinearParams::create(src, "lin", 3, 2);
  LinearParams::create(wide, "lin", 4, 2);
  LinearParams::create(other, "renamed", 3, 2);
  TensorArchive a;
  archive_parameters(src, a);
  EXPECT_THROW(restore_parameters(a, wide), ShapeError);
  EXPECT_THROW(restore_parameters(a, other), std::out_of_range);
}

TEST(Checkpoint, PrefixSelectsSubset) {
  ParameterStore store(1);
  LinearParams::create(store, "enc.lin", 2, 2);
  LinearParams::create(store, "head", 2, 2);
  TensorArchive a;
  archive_parameters(store, a, "enc.");
  EXPECT_EQ(a.entries.size(), 2u);
  EXPECT_TRUE(a.contains("enc.lin.weight"));
  EXPECT_FALSE(a.contains("head.weight"));
}

TEST(Checkpoint, Crc32KnownValue) {
  EXPECT_EQ(crc32_of("123456789"), 0xCBF43926u);
}

}  // namespace
}  // namespace genctx::ad
