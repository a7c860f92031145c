#include "genctx/metrics/rouge.h"

#include <algorithm>
#include <map>
#include <string>

#include "genctx/models/tokenizer.h"

namespace genctx::metrics {

RougeScore rouge1(std::string_view candidate, std::string_view reference) {
  const auto cand = models::split_words(candidate);
  const auto ref = models::split_words(reference);
  if (cand.empty() || ref.empty()) return {};
  std::map<std::string, std::size_t> ref_counts, cand_counts;
  for (const auto& w : ref) ++ref_counts[w];
  for (const auto& w : cand) ++cand_counts[w];
  std::size_t overlap = 0;
  for (const auto& [w, n] : cand_counts) {
    const auto it = ref_counts.find(w);
    if (it != ref_counts.end()) overlap += std::min(n, it->second);
  }
  RougeScore s;
  s.precision = static_cast<double>(overlap) / static_cast<double>(cand.size());
  s.recall = static_cast<double>(overlap) / static_cast<double>(ref.size());
  s.f = overlap == 0 ? 0.0 : 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

}  // namespace genctx::metrics
