#pragma once

#include <span>
#include <vector>

#include "genctx/data/corpus.h"

namespace genctx::metrics {

struct PrfScore {
  std::size_t true_positives = 0;
  std::size_t predicted = 0;
  std::size_t gold = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Multiset overlap of (phrase, tag) pairs for one sentence. Both sides
/// empty scores 1.0.
PrfScore ner_pair_f1(const std::vector<data::EntityPair>& pred, const std::vector<data::EntityPair>& gold);

/// Micro-averaged over sentences: counts are summed before P, R and F1.
/// Throws std::invalid_argument when the lists differ in length.
PrfScore ner_pair_f1_corpus(const std::vector<std::vector<data::EntityPair>>& preds,
                            const std::vector<std::vector<data::EntityPair>>& golds);

/// Unweighted mean of per-class F1. A class absent from both predictions and
/// gold contributes 0. Throws std::invalid_argument on a length mismatch or a
/// label outside [0, classes).
double macro_f1(std::span<const int> preds, std::span<const int> golds, std::size_t classes = 3);

}  // namespace genctx::metrics
