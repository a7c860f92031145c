#include "genctx/metrics/wer.h"

#include <algorithm>
#include <stdexcept>

namespace genctx::metrics {

namespace {

// (|ref|+1) x (|hyp|+1) distance table.
std::vector<std::size_t> distance_table(const Words& ref, const Words& hyp) {
  const std::size_t n = ref.size(), m = hyp.size();
  std::vector<std::size_t> d((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return d[i * (m + 1) + j]; };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = i;
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = j;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t sub = at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      at(i, j) = std::min({sub, at(i - 1, j) + 1, at(i, j - 1) + 1});
    }
  }
  return d;
}

}  // namespace

std::size_t edit_distance(const Words& ref, const Words& hyp) {
  return distance_table(ref, hyp).back();
}

double wer(const Words& ref, const Words& hyp) {
  if (ref.empty()) throw std::invalid_argument("WER needs a non-empty reference");
  return 100.0 * static_cast<double>(edit_distance(ref, hyp)) / static_cast<double>(ref.size());
}

std::vector<bool> matched_reference(const Words& ref, const Words& hyp) {
  const auto d = distance_table(ref, hyp);
  const std::size_t m = hyp.size();
  auto at = [&](std::size_t i, std::size_t j) { return d[i * (m + 1) + j]; };
  std::vector<bool> matched(ref.size(), false);
  std::size_t i = ref.size(), j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && ref[i - 1] == hyp[j - 1] && at(i, j) == at(i - 1, j - 1)) {
      matched[i - 1] = true;
      --i;
      --j;
    } else if (i > 0 && j > 0 && at(i, j) == at(i - 1, j - 1) + 1) {
      --i;
      --j;
    } else if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
      --i;
    } else {
      --j;
    }
  }
  return matched;
}

void ErrorCounter::add(const Words& ref, const Words& hyp) {
  edits += edit_distance(ref, hyp);
  reference_words += ref.size();
}

double ErrorCounter::percent() const {
  if (reference_words == 0) throw std::invalid_argument("WER needs a non-empty reference");
  return 100.0 * static_cast<double>(edits) / static_cast<double>(reference_words);
}

}  // namespace genctx::metrics
