#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "genctx/context/prompts.h"
#include "genctx/data/lexicon.h"

namespace genctx::context {

struct OracleConfig {
  double p_noise = 0.0;
  std::uint64_t seed = 0;
  // Per prompt (P1..P4): chance that each free slot is drawn from the
  // topic's word distribution instead of filler.
  std::array<double, 4> overlap = {0.7, 0.3, 0.2, 0.0};
  // Per prompt: number of free slots around the fixed phrase.
  std::array<std::size_t, 4> free_words = {12, 4, 2, 2};

  bool operator==(const OracleConfig&) const = default;
};

/// Synthetic stand-in for the language model. Output depends only on
/// (seed, source segment key, prompt, p_noise, overlap settings, topic).
///
/// P1: a next-sentence-like word string containing the keyword
/// P2: "what do you think about <kw> ..."
/// P3: "the topic is <kw> ..."
/// P4: a short title ending in the keyword
/// With probability p_noise the keyword (and topic words) come from a
/// uniformly chosen other topic.
std::string oracle_generate(const data::Lexicon& lexicon, PromptId prompt, int topic,
                            const std::string& source_key, const OracleConfig& config);

/// Keyword the oracle would use; exposed for frequency tests.
int oracle_topic_choice(const data::Lexicon& lexicon, PromptId prompt, int topic, const std::string& source_key,
                        const OracleConfig& config);

}  // namespace genctx::context
