#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "genctx/context/cache.h"
#include "genctx/data/corpus.h"
#include "genctx/models/system.h"

namespace genctx::harness {

/// Previous-segment text for each segment key "stream/i"; segments with
/// i = 0 have no entry.
using TextTable = std::map<std::string, std::string>;

TextTable ground_truth_texts(const data::StreamManifest& manifest);

/// Generated text from segment i-1 under `prompt` for every i > 0. With a
/// generator, misses are generated and cached; without one (nullptr) a miss
/// throws std::runtime_error naming the segment.
TextTable generated_texts(const data::StreamManifest& manifest, context::ContextCache& cache,
                          context::ContextGenerator* generator, context::PromptId prompt,
                          const std::string& fingerprint);

/// Context input of every segment (manifest order) for the variant:
/// injection variants get the zero context at i = 0 and the tokenized text
/// otherwise; Baseline and GenerativeAware get none.
std::vector<models::ContextInput> system_inputs(models::Variant variant, const data::StreamManifest& manifest,
                                                const models::TextTokenizer& tokenizer, const TextTable* texts);

/// Teacher inputs for the distillation loss; nullopt at i = 0.
std::vector<std::optional<models::ContextInput>> teacher_inputs(const data::StreamManifest& manifest,
                                                                const models::TextTokenizer& tokenizer,
                                                                const TextTable& texts);

}  // namespace genctx::harness
