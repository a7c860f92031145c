#include "genctx/harness/contexts.h"

#include <fmt/format.h>

#include <stdexcept>

namespace genctx::harness {

TextTable ground_truth_texts(const data::StreamManifest& manifest) {
  TextTable out;
  for (const data::Segment& s : manifest.segments) {
    if (auto prev = data::previous_text_of(manifest, s.stream, s.index)) out[s.key()] = *prev;
  }
  return out;
}

TextTable generated_texts(const data::StreamManifest& manifest, context::ContextCache& cache,
                          context::ContextGenerator* generator, context::PromptId prompt,
                          const std::string& fingerprint) {
  TextTable out;
  for (const data::Segment& s : manifest.segments) {
    if (s.index == 0) continue;
    const data::Segment& prev = manifest.segment(s.stream, s.index - 1);
    context::GenerationRequest req{prev.key(), prev.topic, prompt, prev.transcript()};
    if (generator != nullptr) {
      out[s.key()] = context::get_or_generate(cache, *generator, req).text;
      continue;
    }
    const auto hit = cache.get(req.source_key, prompt, fingerprint);
    if (!hit) {
      throw std::runtime_error(fmt::format("context cache has no {} generation for segment {} (backend {}); run gen-context first",
                                           context::prompt_name(prompt), req.source_key, fingerprint));
    }
    out[s.key()] = hit->text;
  }
  return out;
}

std::vector<models::ContextInput> system_inputs(models::Variant variant, const data::StreamManifest& manifest,
                                                const models::TextTokenizer& tokenizer, const TextTable* texts) {
  std::vector<models::ContextInput> out;
  out.reserve(manifest.segments.size());
  const bool injection = models::uses_text_encoder(variant);
  if (injection && texts == nullptr) {
    throw std::invalid_argument(fmt::format("{} needs context texts", models::variant_name(variant)));
  }
  for (const data::Segment& s : manifest.segments) {
    if (!injection) {
      out.push_back(models::ContextInput::none());
    } else if (s.index == 0) {
      out.push_back(models::ContextInput::zero());
    } else {
      const auto it = texts->find(s.key());
      if (it == texts->end()) throw std::runtime_error(fmt::format("no context text for segment {}", s.key()));
      out.push_back(models::ContextInput::text(tokenizer.encode(it->second)));
    }
  }
  return out;
}

std::vector<std::optional<models::ContextInput>> teacher_inputs(const data::StreamManifest& manifest,
                                                                const models::TextTokenizer& tokenizer,
                                                                const TextTable& texts) {
  std::vector<std::optional<models::ContextInput>> out;
  out.reserve(manifest.segments.size());
  for (const data::Segment& s : manifest.segments) {
    if (s.index == 0) {
      out.push_back(std::nullopt);
      continue;
    }
    const auto it = texts.find(s.key());
    if (it == texts.end()) throw std::runtime_error(fmt::format("no teacher text for segment {}", s.key()));
    out.push_back(models::ContextInput::text(tokenizer.encode(it->second)));
  }
  return out;
}

}  // namespace genctx::harness
