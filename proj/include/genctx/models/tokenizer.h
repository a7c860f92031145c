#pragma once

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "genctx/data/corpus.h"

namespace genctx::models {

/// Lowercased whitespace split.
std::vector<std::string> split_words(std::string_view text);

/// Word-level vocabulary of the text encoder. Id 0 is the reserved leading
/// classification token, id 1 stands for any unknown word.
class TextTokenizer {
 public:
  static constexpr int kCls = 0;
  static constexpr int kUnk = 1;

  TextTokenizer() : TextTokenizer(std::vector<std::string>{}) {}
  /// `words` must not contain duplicates; specials are prepended.
  explicit TextTokenizer(const std::vector<std::string>& words);
  static TextTokenizer for_lexicon(const data::Lexicon& lexicon);

  /// Ids of the words in `text`, without the classification token.
  std::vector<int> encode(std::string_view text) const;
  std::size_t size() const { return vocab_.size(); }
  const std::vector<std::string>& vocabulary() const { return vocab_; }

 private:
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, int> index_;
};

enum class TaskKind { Asr, Ner, Sentiment };
const char* task_name(TaskKind task);
TaskKind parse_task(const std::string& name);

/// CTC output labels: blank at 0, words, then entity start/end markers.
class OutputLabels {
 public:
  OutputLabels() = default;
  explicit OutputLabels(std::vector<std::string> labels);
  static OutputLabels for_lexicon(const data::Lexicon& lexicon);

  int id(const std::string& label) const;
  const std::string& label(int id) const { return labels_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return labels_.size(); }
  const std::vector<std::string>& labels() const { return labels_; }
  static constexpr int kBlank = 0;

  /// CTC target for a segment: words for Asr, words with entity markers
  /// around every tagged phrase for Ner.
  std::vector<int> target(const data::Segment& segment, TaskKind task) const;

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, int> index_;
};

bool is_entity_marker(const std::string& label);

/// Transcript words of a decoded label sequence (markers dropped).
std::vector<std::string> decoded_words(const OutputLabels& labels, std::span<const int> ids);

/// Entity pairs recovered from markers: "<T> w1 w2 </T>" -> ("w1 w2", T).
/// Unclosed or mismatched spans are discarded.
std::vector<data::EntityPair> decoded_entities(const OutputLabels& labels, std::span<const int> ids);

}  // namespace genctx::models
