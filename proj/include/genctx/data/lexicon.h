#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace genctx::data {

struct Topic {
  int id = 0;
  std::string keyword;             // also the named-entity phrase
  std::string tag;                 // entity type of the keyword
  std::vector<std::string> words;  // topical sub-vocabulary, keyword excluded

  bool operator==(const Topic&) const = default;
};

/// An acoustic pattern shared by two homophone labels. Which label is
/// correct depends only on the stream's topic.
struct AmbiguousCodeword {
  std::array<std::string, 2> labels;
  std::vector<int> choice_by_topic;  // 0 or 1 per topic id

  const std::string& label_for(int topic) const {
    return labels[static_cast<std::size_t>(choice_by_topic.at(static_cast<std::size_t>(topic)))];
  }
  bool operator==(const AmbiguousCodeword&) const = default;
};

struct Lexicon {
  std::vector<std::string> common_words;
  std::vector<Topic> topics;
  std::vector<AmbiguousCodeword> ambiguous;
  std::vector<std::string> entity_tags;

  /// Every transcript word: common, topical (keywords included), homophone labels.
  std::vector<std::string> transcript_words() const;
  /// CTC label inventory: blank first, then transcript words, then entity
  /// start/end tokens ("<TAG>", "</TAG>").
  std::vector<std::string> output_labels() const;
  static constexpr const char* kBlank = "<blank>";

  /// Index of the codeword a homophone label belongs to, or -1.
  int codeword_of(const std::string& word) const;

  bool operator==(const Lexicon&) const = default;
};

/// Builds the lexicon for `n_topics` topics and `n_codewords` homophone pairs.
/// Every codeword's topic split is seeded, and topics 2m / 2m+1 always
/// take opposite labels.
/// Throws std::invalid_argument if the built-in word tables are too small.
Lexicon build_lexicon(std::size_t n_topics, std::size_t n_codewords, std::uint64_t seed);

std::string entity_open(const std::string& tag);
std::string entity_close(const std::string& tag);

/// Words the oracle generator uses that never occur in transcripts.
const std::vector<std::string>& generator_filler_words();

}  // namespace genctx::data
