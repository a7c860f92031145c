#include "genctx/data/corpus.h"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "genctx/autodiff/rng.h"

namespace genctx::data {

namespace {

constexpr std::uint64_t kCodebookSalt = 0xc0de;
constexpr std::uint64_t kTopicSalt = 0x70b1c;
constexpr std::uint64_t kStreamSalt = 0x57e4;

// One balanced block of topic ids: a seeded order of topic pairs, each pair
// laid out in seeded order.
std::vector<int> topic_block(std::size_t n_topics, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<int>> groups;
  for (std::size_t t = 0; t < n_topics; t += 2) {
    std::vector<int> g{static_cast<int>(t)};
    if (t + 1 < n_topics) g.push_back(static_cast<int>(t + 1));
    rng.shuffle(g);
    groups.push_back(std::move(g));
  }
  rng.shuffle(groups);
  std::vector<int> out;
  for (const auto& g : groups) out.insert(out.end(), g.begin(), g.end());
  return out;
}

std::vector<int> split_topics(const CorpusConfig& c, std::size_t streams, std::uint64_t split_salt) {
  std::vector<int> out;
  std::vector<int> block;
  for (std::size_t s = 0; s < streams; ++s) {
    const std::size_t b = s / c.n_topics;
    if (s % c.n_topics == 0) block = topic_block(c.n_topics, mix_seed(mix_seed(c.seed, kTopicSalt + split_salt), b));
    out.push_back(block[s % c.n_topics]);
  }
  return out;
}

// Pick the next word, avoiding an exact repeat of the previous one.
std::pair<std::string, bool> draw_word(const CorpusConfig& c, const Lexicon& lex, const Topic& topic,
                                       Rng& rng) {
  const double u = rng.uniform();
  if (!lex.ambiguous.empty() && u < c.ambiguity_rate) {
    const auto& cw = lex.ambiguous[rng.below(lex.ambiguous.size())];
    return {cw.label_for(topic.id), true};
  }
  if (u < c.ambiguity_rate + c.keyword_rate) return {topic.keyword, false};
  if (u < c.ambiguity_rate + c.keyword_rate + c.topical_rate) {
    return {topic.words[rng.below(topic.words.size())], false};
  }
  return {lex.common_words[rng.below(lex.common_words.size())], false};
}

Segment make_segment(const CorpusConfig& c, const Lexicon& lex, const FeatureCodebook& book,
                     int stream, int index, const Topic& topic, Rng& rng) {
  Segment seg;
  seg.stream = stream;
  seg.index = index;
  seg.topic = topic.id;
  seg.sentiment = topic.id % 3;
  while (seg.words.size() < c.tokens_per_segment) {
    auto [word, amb] = draw_word(c, lex, topic, rng);
    if (!seg.words.empty() && word == seg.words.back()) continue;
    seg.words.push_back(word);
    seg.ambiguous.push_back(amb);
    if (word == topic.keyword) seg.entities.push_back({word, topic.tag});
  }
  for (const std::string& word : seg.words) {
    int n = rng.between(c.min_frames, c.max_frames);
    if (word == topic.keyword) n += c.keyword_extra_frames;
    seg.word_frames.push_back(static_cast<std::size_t>(n));
    const auto& mean = book.means[book.index_of(word)];
    for (int f = 0; f < n; ++f) {
      for (std::size_t d = 0; d < c.d_feat; ++d) seg.features.push_back(mean[d] + c.noise_sigma * rng.normal());
    }
    seg.frames += static_cast<std::size_t>(n);
  }
  return seg;
}

}  // namespace

void validate(const CorpusConfig& c) {
  if (c.n_topics < 2) throw std::invalid_argument("corpus needs at least 2 topics");
  if (c.train_streams == 0 && c.eval_streams == 0) throw std::invalid_argument("corpus has 0 streams");
  if (c.segments_per_stream == 0) throw std::invalid_argument("segments_per_stream must be positive");
  if (c.tokens_per_segment == 0) throw std::invalid_argument("tokens_per_segment must be positive");
  if (c.d_feat == 0) throw std::invalid_argument("d_feat must be positive");
  for (double r : {c.ambiguity_rate, c.keyword_rate, c.topical_rate}) {
    if (!(r >= 0.0 && r <= 1.0)) throw std::invalid_argument("rates must lie in [0, 1]");
  }
  if (c.ambiguity_rate + c.keyword_rate + c.topical_rate > 1.0 + 1e-12) {
    throw std::invalid_argument("ambiguity + keyword + topical rates exceed 1");
  }
  if (c.ambiguity_rate > 0.0 && c.n_codewords == 0) {
    throw std::invalid_argument("ambiguity rate > 0 needs at least one codeword");
  }
  if (c.min_frames < 1 || c.max_frames < c.min_frames) throw std::invalid_argument("bad frames-per-token range");
  if (c.keyword_extra_frames < 0) throw std::invalid_argument("keyword_extra_frames must be >= 0");
  if (!(c.noise_sigma >= 0.0)) throw std::invalid_argument("noise sigma must be >= 0");
}

const char* sentiment_name(int label) {
  switch (label) {
    case 0: return "negative";
    case 1: return "neutral";
    case 2: return "positive";
  }
  throw std::out_of_range(fmt::format("sentiment label {}", label));
}

std::string Segment::transcript() const {
  std::string out;
  for (const std::string& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

std::string Segment::key() const { return fmt::format("{}/{}", stream, index); }

std::size_t FeatureCodebook::index_of(const std::string& word) const {
  const auto it = std::find(words.begin(), words.end(), word);
  if (it == words.end()) throw std::out_of_range("word not in codebook: " + word);
  return static_cast<std::size_t>(it - words.begin());
}

const std::string& FeatureCodebook::nearest(const double* frame) const {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t w = 0; w < means.size(); ++w) {
    double d = 0.0;
    for (std::size_t k = 0; k < means[w].size(); ++k) d += (frame[k] - means[w][k]) * (frame[k] - means[w][k]);
    if (d < best_d) {
      best_d = d;
      best = w;
    }
  }
  return words[best];
}

FeatureCodebook build_codebook(const CorpusConfig& c, const Lexicon& lex) {
  FeatureCodebook book;
  book.sigma = c.noise_sigma;
  book.min_frames = c.min_frames;
  book.max_frames = c.max_frames;
  book.words = lex.transcript_words();
  Rng rng(mix_seed(c.seed, kCodebookSalt));
  std::vector<std::vector<double>> by_codeword(lex.ambiguous.size());
  for (const std::string& w : book.words) {
    std::vector<double> mean(c.d_feat);
    for (double& v : mean) v = rng.normal();
    const int cw = lex.codeword_of(w);
    if (cw >= 0) {
      auto& shared = by_codeword[static_cast<std::size_t>(cw)];
      if (shared.empty()) shared = mean;
      mean = shared;
    }
    book.means.push_back(std::move(mean));
  }
  return book;
}

const Segment* StreamManifest::find(int stream, int index) const {
  for (const Segment& s : segments) {
    if (s.stream == stream && s.index == index) return &s;
  }
  return nullptr;
}

const Segment& StreamManifest::segment(int stream, int index) const {
  const Segment* s = find(stream, index);
  if (s == nullptr) throw std::out_of_range(fmt::format("no segment {}/{} in split {}", stream, index, split));
  return *s;
}

std::vector<int> StreamManifest::stream_ids() const {
  std::vector<int> ids;
  for (const Segment& s : segments) {
    if (ids.empty() || ids.back() != s.stream) ids.push_back(s.stream);
  }
  return ids;
}

std::vector<int> assign_topics(const CorpusConfig& c) {
  std::vector<int> topics = split_topics(c, c.train_streams, 0);
  const std::vector<int> eval = split_topics(c, c.eval_streams, 1);
  topics.insert(topics.end(), eval.begin(), eval.end());
  return topics;
}

Corpus generate_corpus(const CorpusConfig& config) {
  validate(config);
  Corpus corpus;
  const Lexicon lex = build_lexicon(config.n_topics, config.n_codewords, config.seed);
  corpus.codebook = build_codebook(config, lex);
  const std::vector<int> topics = assign_topics(config);

  corpus.train.split = "train";
  corpus.eval.split = "eval";
  for (StreamManifest* m : {&corpus.train, &corpus.eval}) {
    m->config = config;
    m->lexicon = lex;
  }
  for (std::size_t s = 0; s < topics.size(); ++s) {
    StreamManifest& m = s < config.train_streams ? corpus.train : corpus.eval;
    // Each stream draws from its own generator, independent of the others.
    Rng rng(mix_seed(config.seed, kStreamSalt + s));
    const Topic& topic = lex.topics[static_cast<std::size_t>(topics[s])];
    for (std::size_t i = 0; i < config.segments_per_stream; ++i) {
      m.segments.push_back(make_segment(config, lex, corpus.codebook, static_cast<int>(s),
                                        static_cast<int>(i), topic, rng));
    }
  }
  return corpus;
}

std::optional<std::string> previous_text_of(const StreamManifest& manifest, int stream, int index) {
  manifest.segment(stream, index);
  if (index == 0) return std::nullopt;
  return manifest.segment(stream, index - 1).transcript();
}

}  // namespace genctx::data
