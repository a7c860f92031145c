#include "genctx/context/oracle.h"

#include <fmt/format.h>

#include <stdexcept>
#include <vector>

#include "genctx/autodiff/rng.h"

namespace genctx::context {

namespace {

constexpr const char* kTitleWords[] = {"notes", "on", "my", "story", "guide", "life", "thoughts", "about",
                                       "everyday", "lessons", "from", "beyond"};

Rng oracle_rng(PromptId prompt, const std::string& source_key, const OracleConfig& c) {
  std::uint64_t s = mix_seed(c.seed, stable_hash(source_key));
  return Rng(mix_seed(s, static_cast<std::uint64_t>(prompt) + 1));
}

int pick_topic(const data::Lexicon& lex, int topic, const OracleConfig& c, Rng& rng) {
  if (topic < 0 || static_cast<std::size_t>(topic) >= lex.topics.size()) {
    throw std::out_of_range(fmt::format("topic {} not in lexicon", topic));
  }
  if (lex.topics.size() < 2 || !rng.bernoulli(c.p_noise)) return topic;
  const int other = static_cast<int>(rng.below(lex.topics.size() - 1));
  return other >= topic ? other + 1 : other;
}

std::string topic_or_filler(const data::Lexicon& lex, const data::Topic& t, double overlap, Rng& rng) {
  const auto& filler = data::generator_filler_words();
  if (!rng.bernoulli(overlap)) return filler[rng.below(filler.size())];
  // Same mix as the corpus' non-ambiguous tokens: topical words dominate.
  if (rng.bernoulli(0.6)) return t.words[rng.below(t.words.size())];
  return lex.common_words[rng.below(lex.common_words.size())];
}

}  // namespace

int oracle_topic_choice(const data::Lexicon& lexicon, PromptId prompt, int topic, const std::string& source_key,
                        const OracleConfig& config) {
  Rng rng = oracle_rng(prompt, source_key, config);
  return pick_topic(lexicon, topic, config, rng);
}

std::string oracle_generate(const data::Lexicon& lex, PromptId prompt, int topic, const std::string& source_key,
                            const OracleConfig& c) {
  Rng rng = oracle_rng(prompt, source_key, c);
  const data::Topic& t = lex.topics[static_cast<std::size_t>(pick_topic(lex, topic, c, rng))];
  const auto p = static_cast<std::size_t>(prompt);
  if (p >= 4) throw std::invalid_argument("unknown prompt id");

  std::vector<std::string> words;
  auto free_slots = [&](std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) words.push_back(topic_or_filler(lex, t, c.overlap[p], rng));
  };
  switch (prompt) {
    case PromptId::P1: {
      free_slots(c.free_words[p]);
      const std::size_t at = rng.below(words.size() + 1);
      words.insert(words.begin() + static_cast<std::ptrdiff_t>(at), t.keyword);
      break;
    }
    case PromptId::P2:
      words = {"what", "do", "you", "think", "about", t.keyword};
      free_slots(c.free_words[p]);
      break;
    case PromptId::P3:
      words = {"the", "topic", "is", t.keyword};
      free_slots(c.free_words[p]);
      break;
    case PromptId::P4:
      for (std::size_t i = 0; i < c.free_words[p]; ++i) {
        words.push_back(rng.bernoulli(c.overlap[p]) ? topic_or_filler(lex, t, 1.0, rng)
                                                    : kTitleWords[rng.below(std::size(kTitleWords))]);
      }
      words.push_back(t.keyword);
      break;
  }
  std::string out;
  for (const std::string& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

}  // namespace genctx::context
