#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace genctx {

/// SplitMix64 finalizer; used to derive independent seeds from a parent seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);
/// Stable 64-bit FNV-1a of a string (no dependence on std::hash).
std::uint64_t stable_hash(std::string_view text);

/// Seeded generator with platform-independent draws.
///
/// std::mt19937_64 output is fully specified by the standard, but the
/// distribution classes are not, so every draw here is derived from raw
/// engine output.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::size_t below(std::size_t n);
  /// Uniform integer in [lo, hi].
  int between(int lo, int hi);
  double normal();
  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[below(i)]);
  }

  std::vector<std::size_t> permutation(std::size_t n);

 private:
  std::mt19937_64 engine_;
};

}  // namespace genctx
