#pragma once

#include <string>
#include <vector>

namespace genctx::metrics {

using Words = std::vector<std::string>;

/// Levenshtein distance over words, unit costs.
std::size_t edit_distance(const Words& ref, const Words& hyp);

/// 100 * edit_distance / |ref|. Throws std::invalid_argument for an empty reference.
double wer(const Words& ref, const Words& hyp);

/// For each reference position: true when a minimum-edit alignment pairs it
/// with an identical hypothesis word. Among minimal alignments, matches are
/// preferred during the trace-back.
std::vector<bool> matched_reference(const Words& ref, const Words& hyp);

/// Corpus accumulator: edits and reference words summed over utterances.
struct ErrorCounter {
  std::size_t edits = 0;
  std::size_t reference_words = 0;

  void add(const Words& ref, const Words& hyp);
  double percent() const;
};

}  // namespace genctx::metrics
