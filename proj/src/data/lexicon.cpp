#include "genctx/data/lexicon.h"

#include <fmt/format.h>

#include <stdexcept>

#include "genctx/autodiff/rng.h"

namespace genctx::data {

namespace {

struct TopicSeed {
  const char* keyword;
  std::array<const char*, 5> words;
};

constexpr TopicSeed kTopics[] = {
    {"cooking", {"recipe", "oven", "spice", "flavor", "kitchen"}},
    {"travel", {"passport", "airport", "luggage", "journey", "hotel"}},
    {"music", {"guitar", "melody", "rhythm", "concert", "chord"}},
    {"sports", {"stadium", "goal", "coach", "league", "referee"}},
    {"finance", {"budget", "stock", "interest", "loan", "market"}},
    {"gardening", {"soil", "seeds", "compost", "tulip", "shovel"}},
    {"history", {"empire", "ancient", "treaty", "dynasty", "archive"}},
    {"science", {"experiment", "molecule", "theory", "laboratory", "data"}},
    {"movies", {"director", "scene", "actor", "studio", "premiere"}},
    {"fashion", {"fabric", "runway", "designer", "jacket", "style"}},
    {"politics", {"election", "senate", "policy", "ballot", "campaign"}},
    {"health", {"doctor", "vitamin", "exercise", "clinic", "sleep"}},
    {"weather", {"storm", "forecast", "humid", "thunder", "breeze"}},
    {"painting", {"canvas", "brush", "palette", "gallery", "portrait"}},
    {"astronomy", {"planet", "telescope", "orbit", "comet", "galaxy"}},
    {"ocean", {"whale", "coral", "tide", "reef", "harbor"}},
    {"farming", {"tractor", "harvest", "barn", "cattle", "wheat"}},
    {"poetry", {"verse", "rhyme", "stanza", "sonnet", "meter"}},
    {"chess", {"bishop", "castle", "pawn", "gambit", "checkmate"}},
    {"robotics", {"sensor", "servo", "circuit", "actuator", "firmware"}},
    {"baking", {"dough", "yeast", "pastry", "crust", "muffin"}},
    {"camping", {"tent", "lantern", "trail", "campfire", "backpack"}},
    {"photography", {"lens", "shutter", "tripod", "exposure", "aperture"}},
    {"architecture", {"column", "facade", "blueprint", "arch", "concrete"}},
};

constexpr std::array<const char*, 2> kHomophones[] = {
    {"pair", "pear"},   {"right", "write"}, {"sea", "see"},     {"knight", "night"},
    {"flower", "flour"}, {"mail", "male"},   {"bare", "bear"},   {"peace", "piece"},
    {"sun", "son"},     {"tail", "tale"},   {"week", "weak"},   {"hair", "hare"},
};

constexpr const char* kCommon[] = {"the", "a",  "and",  "of",   "to",  "is",
                                   "in",  "it", "we",   "they", "was", "with"};

constexpr const char* kTags[] = {"PER", "LOC", "ORG", "GPE", "NORP",
                                 "DATE", "LAW", "MONEY", "EVENT"};

}  // namespace

std::vector<std::string> Lexicon::transcript_words() const {
  std::vector<std::string> out(common_words);
  for (const Topic& t : topics) {
    out.push_back(t.keyword);
    out.insert(out.end(), t.words.begin(), t.words.end());
  }
  for (const AmbiguousCodeword& c : ambiguous) out.insert(out.end(), c.labels.begin(), c.labels.end());
  return out;
}

std::vector<std::string> Lexicon::output_labels() const {
  std::vector<std::string> out{kBlank};
  for (std::string& w : transcript_words()) out.push_back(std::move(w));
  for (const std::string& tag : entity_tags) {
    out.push_back(entity_open(tag));
    out.push_back(entity_close(tag));
  }
  return out;
}

int Lexicon::codeword_of(const std::string& word) const {
  for (std::size_t c = 0; c < ambiguous.size(); ++c) {
    if (ambiguous[c].labels[0] == word || ambiguous[c].labels[1] == word) return static_cast<int>(c);
  }
  return -1;
}

Lexicon build_lexicon(std::size_t n_topics, std::size_t n_codewords, std::uint64_t seed) {
  if (n_topics < 2) throw std::invalid_argument("at least 2 topics are required");
  if (n_topics > std::size(kTopics)) {
    throw std::invalid_argument(
        fmt::format("{} topics requested, the vocabulary supports {}", n_topics, std::size(kTopics)));
  }
  if (n_codewords > std::size(kHomophones)) {
    throw std::invalid_argument(fmt::format("{} ambiguous codewords requested, the vocabulary supports {}",
                                            n_codewords, std::size(kHomophones)));
  }
  Lexicon lex;
  lex.common_words.assign(std::begin(kCommon), std::end(kCommon));
  lex.entity_tags.assign(std::begin(kTags), std::end(kTags));
  for (std::size_t t = 0; t < n_topics; ++t) {
    Topic topic;
    topic.id = static_cast<int>(t);
    topic.keyword = kTopics[t].keyword;
    topic.tag = kTags[t % std::size(kTags)];
    topic.words.assign(kTopics[t].words.begin(), kTopics[t].words.end());
    lex.topics.push_back(std::move(topic));
  }
  Rng rng(mix_seed(seed, 0xa3b1));
  for (std::size_t c = 0; c < n_codewords; ++c) {
    AmbiguousCodeword cw;
    cw.labels = {kHomophones[c][0], kHomophones[c][1]};
    cw.choice_by_topic.assign(n_topics, 0);
    // Topics 2m and 2m+1 always disagree, so any set of whole pairs is
    // exactly balanced between the two labels.
    for (std::size_t t = 0; t + 1 < n_topics; t += 2) {
      const int first = rng.bernoulli(0.5) ? 1 : 0;
      cw.choice_by_topic[t] = first;
      cw.choice_by_topic[t + 1] = 1 - first;
    }
    if (n_topics % 2 == 1) cw.choice_by_topic[n_topics - 1] = rng.bernoulli(0.5) ? 1 : 0;
    lex.ambiguous.push_back(std::move(cw));
  }
  return lex;
}

std::string entity_open(const std::string& tag) { return "<" + tag + ">"; }
std::string entity_close(const std::string& tag) { return "</" + tag + ">"; }

const std::vector<std::string>& generator_filler_words() {
  static const std::vector<std::string> words = {
      "notes", "on",   "my",    "story", "guide", "life",    "beyond", "thoughts", "about",
      "everyday", "lessons", "from", "topic", "text", "discusses", "what", "how", "why",
      "do", "you", "your", "think", "feel", "did", "happen", "next", "then", "also",
      "really", "very", "good", "time", "day", "people"};
  return words;
}

}  // namespace genctx::data
