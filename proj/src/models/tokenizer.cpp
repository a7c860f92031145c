#include "genctx/models/tokenizer.h"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <set>
#include <stdexcept>

namespace genctx::models {

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

TextTokenizer::TextTokenizer(const std::vector<std::string>& words) {
  vocab_ = {"[cls]", "[unk]"};
  vocab_.insert(vocab_.end(), words.begin(), words.end());
  for (std::size_t i = 0; i < vocab_.size(); ++i) {
    if (!index_.emplace(vocab_[i], static_cast<int>(i)).second) {
      throw std::invalid_argument("duplicate tokenizer word: " + vocab_[i]);
    }
  }
}

TextTokenizer TextTokenizer::for_lexicon(const data::Lexicon& lexicon) {
  std::set<std::string> words;
  for (const std::string& w : lexicon.transcript_words()) words.insert(w);
  for (const std::string& w : data::generator_filler_words()) words.insert(w);
  return TextTokenizer(std::vector<std::string>(words.begin(), words.end()));
}

std::vector<int> TextTokenizer::encode(std::string_view text) const {
  std::vector<int> ids;
  for (const std::string& w : split_words(text)) {
    const auto it = index_.find(w);
    ids.push_back(it == index_.end() ? kUnk : it->second);
  }
  return ids;
}

const char* task_name(TaskKind task) {
  switch (task) {
    case TaskKind::Asr: return "asr";
    case TaskKind::Ner: return "ner";
    case TaskKind::Sentiment: return "sentiment";
  }
  return "?";
}

TaskKind parse_task(const std::string& name) {
  if (name == "asr") return TaskKind::Asr;
  if (name == "ner") return TaskKind::Ner;
  if (name == "sentiment") return TaskKind::Sentiment;
  throw std::invalid_argument(fmt::format("unknown task '{}' (asr, ner, sentiment)", name));
}

OutputLabels::OutputLabels(std::vector<std::string> labels) : labels_(std::move(labels)) {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (!index_.emplace(labels_[i], static_cast<int>(i)).second) {
      throw std::invalid_argument("duplicate output label: " + labels_[i]);
    }
  }
}

OutputLabels OutputLabels::for_lexicon(const data::Lexicon& lexicon) {
  return OutputLabels(lexicon.output_labels());
}

int OutputLabels::id(const std::string& label) const {
  const auto it = index_.find(label);
  if (it == index_.end()) throw std::out_of_range("unknown output label: " + label);
  return it->second;
}

std::vector<int> OutputLabels::target(const data::Segment& segment, TaskKind task) const {
  if (task == TaskKind::Sentiment) throw std::invalid_argument("sentiment has no CTC target");
  std::vector<int> out;
  std::size_t next_entity = 0;
  for (const std::string& w : segment.words) {
    const bool tagged = task == TaskKind::Ner && next_entity < segment.entities.size() &&
                        segment.entities[next_entity].phrase == w;
    if (tagged) {
      const std::string& tag = segment.entities[next_entity++].tag;
      out.push_back(id(data::entity_open(tag)));
      out.push_back(id(w));
      out.push_back(id(data::entity_close(tag)));
    } else {
      out.push_back(id(w));
    }
  }
  return out;
}

bool is_entity_marker(const std::string& label) {
  return label.size() >= 3 && label.front() == '<' && label.back() == '>' && label != "<blank>";
}

std::vector<std::string> decoded_words(const OutputLabels& labels, std::span<const int> ids) {
  std::vector<std::string> out;
  for (int id : ids) {
    if (id == OutputLabels::kBlank) continue;
    const std::string& l = labels.label(id);
    if (!is_entity_marker(l)) out.push_back(l);
  }
  return out;
}

std::vector<data::EntityPair> decoded_entities(const OutputLabels& labels, std::span<const int> ids) {
  std::vector<data::EntityPair> out;
  std::string open_tag;
  std::vector<std::string> phrase;
  bool inside = false;
  for (int id : ids) {
    if (id == OutputLabels::kBlank) continue;
    const std::string& l = labels.label(id);
    if (is_entity_marker(l)) {
      const bool closing = l.size() > 3 && l[1] == '/';
      const std::string tag = l.substr(closing ? 2 : 1, l.size() - (closing ? 3 : 2));
      if (!closing) {
        inside = true;
        open_tag = tag;
        phrase.clear();
      } else if (inside && tag == open_tag && !phrase.empty()) {
        std::string text = phrase.front();
        for (std::size_t i = 1; i < phrase.size(); ++i) text += " " + phrase[i];
        out.push_back({text, tag});
        inside = false;
      } else {
        inside = false;
      }
    } else if (inside) {
      phrase.push_back(l);
    }
  }
  return out;
}

}  // namespace genctx::models
