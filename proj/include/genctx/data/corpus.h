#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "genctx/data/lexicon.h"

namespace genctx::data {

struct CorpusConfig {
  std::size_t n_topics = 20;
  std::size_t n_codewords = 8;
  std::size_t train_streams = 50;
  std::size_t eval_streams = 10;
  std::size_t segments_per_stream = 10;
  std::size_t tokens_per_segment = 12;
  double ambiguity_rate = 0.3;
  double keyword_rate = 0.1;
  double topical_rate = 0.4;
  double noise_sigma = 0.1;
  int min_frames = 1;
  int max_frames = 3;
  // Entity keywords get this many extra frames so the tagged span fits.
  int keyword_extra_frames = 2;
  std::size_t d_feat = 16;
  std::uint64_t seed = 1;

  bool operator==(const CorpusConfig&) const = default;
};

/// Throws std::invalid_argument on a degenerate configuration.
void validate(const CorpusConfig& config);

enum class Sentiment { Negative = 0, Neutral = 1, Positive = 2 };
const char* sentiment_name(int label);

struct EntityPair {
  std::string phrase;
  std::string tag;

  bool operator==(const EntityPair&) const = default;
  auto operator<=>(const EntityPair&) const = default;
};

struct Segment {
  int stream = 0;
  int index = 0;
  int topic = 0;
  std::vector<std::string> words;
  std::vector<bool> ambiguous;           // per word
  std::vector<std::size_t> word_frames;  // frames spanned by each word
  std::vector<EntityPair> entities;
  int sentiment = 0;
  std::size_t frames = 0;
  std::vector<double> features;  // frames x d_feat, row-major

  std::string transcript() const;
  std::string key() const;  // "stream/index"
  bool operator==(const Segment&) const = default;
};

/// Token means per transcript word. Both labels of an ambiguous codeword
/// share one mean.
struct FeatureCodebook {
  std::vector<std::string> words;
  std::vector<std::vector<double>> means;
  double sigma = 0.1;
  int min_frames = 1;
  int max_frames = 3;

  std::size_t index_of(const std::string& word) const;
  /// Word whose mean is nearest to `frame`; ties go to the lower index.
  const std::string& nearest(const double* frame) const;
};

FeatureCodebook build_codebook(const CorpusConfig& config, const Lexicon& lexicon);

struct StreamManifest {
  static constexpr int kFormatVersion = 1;

  std::string split;
  CorpusConfig config;
  Lexicon lexicon;
  std::vector<Segment> segments;  // grouped by stream, index ascending

  const Segment& segment(int stream, int index) const;
  const Segment* find(int stream, int index) const;
  std::vector<int> stream_ids() const;
  bool operator==(const StreamManifest&) const = default;
};

struct Corpus {
  StreamManifest train;
  StreamManifest eval;
  FeatureCodebook codebook;
};

/// Train streams get ids [0, train_streams), eval streams follow.
Corpus generate_corpus(const CorpusConfig& config);

/// Topic of every stream id, balanced per split.
std::vector<int> assign_topics(const CorpusConfig& config);

/// Ground-truth transcript of segment i-1, nullopt for i = 0.
/// Throws std::out_of_range if (stream, i) is not in the manifest.
std::optional<std::string> previous_text_of(const StreamManifest& manifest, int stream, int index);

}  // namespace genctx::data
