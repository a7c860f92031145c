#include "genctx/harness/evaluator.h"

#include <fmt/format.h>

#include <algorithm>

#include "genctx/losses/ctc.h"
#include "genctx/metrics/classification.h"
#include "genctx/metrics/wer.h"

namespace genctx::harness {

std::vector<std::pair<std::string, double>> EvalResult::metrics(models::TaskKind task) const {
  switch (task) {
    case models::TaskKind::Asr:
      return {{"wer", wer}, {"ambiguous_error", ambiguous_error}};
    case models::TaskKind::Ner:
      return {{"wer", wer}, {"ambiguous_error", ambiguous_error}, {"ner_f1", ner_f1}};
    case models::TaskKind::Sentiment:
      return {{"sentiment_macro_f1", sentiment_f1}};
  }
  return {};
}

nlohmann::json EvalResult::to_json(models::TaskKind task) const {
  nlohmann::json j{{"segments", segments}, {"ambiguous_positions", ambiguous_positions}};
  for (const auto& [name, value] : metrics(task)) j[name] = value;
  return j;
}

EvalResult evaluate_system(const models::ContextSystem& system, const PreparedSplit& split, const EvalInputs& in) {
  ad::NoGradGuard guard;
  const data::StreamManifest& manifest = *split.manifest;
  const models::TaskKind task = system.config().task;
  if (!in.decoded && in.contexts.size() != manifest.segments.size()) {
    throw std::invalid_argument("one context input per evaluation segment is required");
  }
  if (task != models::TaskKind::Sentiment && in.labels == nullptr) {
    throw std::invalid_argument("CTC evaluation needs the output labels");
  }

  EvalResult result;
  result.segments = manifest.segments.size();
  result.hypotheses.resize(manifest.segments.size());
  metrics::ErrorCounter errors;
  std::size_t ambiguous_missed = 0;
  std::vector<std::vector<data::EntityPair>> pred_entities, gold_entities;
  std::vector<int> pred_sentiment, gold_sentiment;

  std::string previous_decode;
  for (std::size_t i = 0; i < manifest.segments.size(); ++i) {
    const data::Segment& seg = manifest.segments[i];
    models::ContextInput ctx;
    if (in.decoded) {
      if (seg.index > 0 && (i == 0 || manifest.segments[i - 1].stream != seg.stream ||
                            manifest.segments[i - 1].index != seg.index - 1)) {
        throw std::invalid_argument(fmt::format("decoded context needs segment {} right after its predecessor", seg.key()));
      }
      ctx = seg.index == 0 ? models::ContextInput::zero() : in.decoded(seg, previous_decode);
      if (!models::uses_text_encoder(system.variant())) ctx = models::ContextInput::none();
    } else {
      ctx = in.contexts[i];
    }
    const models::ForwardResult r = system.forward(split.features[i], ctx);

    if (task == models::TaskKind::Sentiment) {
      auto v = r.output.values();
      const int pred = static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
      pred_sentiment.push_back(pred);
      gold_sentiment.push_back(seg.sentiment);
      result.hypotheses[i] = data::sentiment_name(pred);
      previous_decode.clear();
      continue;
    }
    const std::vector<int> ids = losses::ctc_greedy_decode(r.output, models::OutputLabels::kBlank);
    const metrics::Words hyp = models::decoded_words(*in.labels, ids);
    errors.add(seg.words, hyp);
    const std::vector<bool> matched = metrics::matched_reference(seg.words, hyp);
    for (std::size_t w = 0; w < seg.words.size(); ++w) {
      if (!seg.ambiguous[w]) continue;
      ++result.ambiguous_positions;
      if (!matched[w]) ++ambiguous_missed;
    }
    pred_entities.push_back(models::decoded_entities(*in.labels, ids));
    gold_entities.push_back(seg.entities);
    std::string text;
    for (const auto& w : hyp) text += (text.empty() ? "" : " ") + w;
    result.hypotheses[i] = text;
    previous_decode = text;
  }

  if (task == models::TaskKind::Sentiment) {
    result.sentiment_f1 = metrics::macro_f1(pred_sentiment, gold_sentiment, 3);
  } else {
    result.wer = errors.reference_words > 0 ? errors.percent() : 0.0;
    result.ambiguous_error = result.ambiguous_positions > 0
                                 ? 100.0 * static_cast<double>(ambiguous_missed) /
                                       static_cast<double>(result.ambiguous_positions)
                                 : 0.0;
    result.ner_f1 = metrics::ner_pair_f1_corpus(pred_entities, gold_entities).f1;
  }
  return result;
}

}  // namespace genctx::harness
