#pragma once

#include <string_view>

namespace genctx::metrics {

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
};

/// Unigram overlap with clipped counts over lowercased whitespace tokens.
/// Zero when either side is empty.
RougeScore rouge1(std::string_view candidate, std::string_view reference);
inline double rouge1_f(std::string_view candidate, std::string_view reference) {
  return rouge1(candidate, reference).f;
}

}  // namespace genctx::metrics
