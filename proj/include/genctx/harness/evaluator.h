#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "genctx/harness/trainer.h"

namespace genctx::harness {

struct EvalResult {
  std::size_t segments = 0;
  double wer = 0.0;              // corpus WER (%), CTC tasks
  double ambiguous_error = 0.0;  // % of ambiguous reference words not recovered
  std::size_t ambiguous_positions = 0;
  double ner_f1 = 0.0;           // micro F1 of (phrase, tag) pairs, NER task
  double sentiment_f1 = 0.0;     // macro F1, sentiment task
  std::vector<std::string> hypotheses;

  /// The metrics that apply to `task`, by name.
  std::vector<std::pair<std::string, double>> metrics(models::TaskKind task) const;
  nlohmann::json to_json(models::TaskKind task) const;
};

/// Maps a segment and the decoded text of its predecessor to a context input.
using DecodedContextFn = std::function<models::ContextInput(const data::Segment&, const std::string&)>;

struct EvalInputs {
  const models::OutputLabels* labels = nullptr;
  /// Context per segment (manifest order); used unless `decoded` is set.
  std::vector<models::ContextInput> contexts;
  /// When set, streams run left to right and each segment's context comes
  /// from the greedy decode of the previous segment (zero context at i = 0).
  DecodedContextFn decoded;
};

/// Greedy CTC decode -> WER, ambiguous-token error and entity F1; sentiment
/// head -> macro F1. Runs without gradient recording.
EvalResult evaluate_system(const models::ContextSystem& system, const PreparedSplit& split, const EvalInputs& inputs);

}  // namespace genctx::harness
