#include "genctx/data/manifest.h"

#include <fmt/format.h>

#include <sstream>

#include "genctx/autodiff/checkpoint.h"
#include "genctx/data/json_io.h"
#include "genctx/errors.h"
#include "genctx/io.h"

namespace genctx::data {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "genctx-manifest";

template <typename T>
void read_field(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

json segment_record(const Segment& s) {
  json entities = json::array();
  for (const EntityPair& e : s.entities) entities.push_back({e.phrase, e.tag});
  std::vector<int> amb(s.ambiguous.begin(), s.ambiguous.end());
  return json{{"stream", s.stream},       {"index", s.index},
              {"topic", s.topic},         {"transcript", s.transcript()},
              {"words", s.words},         {"ambiguous", amb},
              {"word_frames", s.word_frames}, {"entities", entities},
              {"sentiment", s.sentiment}, {"frames", s.frames}};
}

Segment parse_segment(const json& j) {
  Segment s;
  s.stream = j.at("stream").get<int>();
  s.index = j.at("index").get<int>();
  s.topic = j.at("topic").get<int>();
  s.words = j.at("words").get<std::vector<std::string>>();
  for (int a : j.at("ambiguous").get<std::vector<int>>()) s.ambiguous.push_back(a != 0);
  s.word_frames = j.at("word_frames").get<std::vector<std::size_t>>();
  for (const json& e : j.at("entities")) s.entities.push_back({e.at(0).get<std::string>(), e.at(1).get<std::string>()});
  s.sentiment = j.at("sentiment").get<int>();
  s.frames = j.at("frames").get<std::size_t>();
  if (s.ambiguous.size() != s.words.size() || s.word_frames.size() != s.words.size()) {
    throw IntegrityError(fmt::format("segment {} has inconsistent per-word fields", s.key()));
  }
  return s;
}

}  // namespace

json to_json(const CorpusConfig& c) {
  return json{{"n_topics", c.n_topics},
              {"n_codewords", c.n_codewords},
              {"train_streams", c.train_streams},
              {"eval_streams", c.eval_streams},
              {"segments_per_stream", c.segments_per_stream},
              {"tokens_per_segment", c.tokens_per_segment},
              {"ambiguity_rate", c.ambiguity_rate},
              {"keyword_rate", c.keyword_rate},
              {"topical_rate", c.topical_rate},
              {"noise_sigma", c.noise_sigma},
              {"min_frames", c.min_frames},
              {"max_frames", c.max_frames},
              {"keyword_extra_frames", c.keyword_extra_frames},
              {"d_feat", c.d_feat},
              {"seed", c.seed}};
}

CorpusConfig corpus_config_from_json(const json& j) {
  CorpusConfig c;
  const json defaults = to_json(c);
  for (const auto& [key, value] : j.items()) {
    if (!defaults.contains(key)) throw ConfigError(fmt::format("unknown corpus key '{}'", key));
  }
  try {
    read_field(j, "n_topics", c.n_topics);
    read_field(j, "n_codewords", c.n_codewords);
    read_field(j, "train_streams", c.train_streams);
    read_field(j, "eval_streams", c.eval_streams);
    read_field(j, "segments_per_stream", c.segments_per_stream);
    read_field(j, "tokens_per_segment", c.tokens_per_segment);
    read_field(j, "ambiguity_rate", c.ambiguity_rate);
    read_field(j, "keyword_rate", c.keyword_rate);
    read_field(j, "topical_rate", c.topical_rate);
    read_field(j, "noise_sigma", c.noise_sigma);
    read_field(j, "min_frames", c.min_frames);
    read_field(j, "max_frames", c.max_frames);
    read_field(j, "keyword_extra_frames", c.keyword_extra_frames);
    read_field(j, "d_feat", c.d_feat);
    read_field(j, "seed", c.seed);
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("corpus config: {}", e.what()));
  }
  return c;
}

json to_json(const Lexicon& lex) {
  json topics = json::array();
  for (const Topic& t : lex.topics) {
    topics.push_back({{"id", t.id}, {"keyword", t.keyword}, {"tag", t.tag}, {"words", t.words}});
  }
  json ambiguous = json::array();
  for (const AmbiguousCodeword& c : lex.ambiguous) {
    ambiguous.push_back({{"labels", c.labels}, {"choice_by_topic", c.choice_by_topic}});
  }
  return json{{"common_words", lex.common_words},
              {"topics", topics},
              {"ambiguous", ambiguous},
              {"entity_tags", lex.entity_tags}};
}

Lexicon lexicon_from_json(const json& j) {
  Lexicon lex;
  lex.common_words = j.at("common_words").get<std::vector<std::string>>();
  lex.entity_tags = j.at("entity_tags").get<std::vector<std::string>>();
  for (const json& t : j.at("topics")) {
    lex.topics.push_back({t.at("id").get<int>(), t.at("keyword").get<std::string>(),
                          t.at("tag").get<std::string>(), t.at("words").get<std::vector<std::string>>()});
  }
  for (const json& c : j.at("ambiguous")) {
    AmbiguousCodeword cw;
    cw.labels = c.at("labels").get<std::array<std::string, 2>>();
    cw.choice_by_topic = c.at("choice_by_topic").get<std::vector<int>>();
    lex.ambiguous.push_back(std::move(cw));
  }
  return lex;
}

std::filesystem::path features_path(const std::filesystem::path& manifest_path) {
  std::filesystem::path p = manifest_path;
  p += ".features";
  return p;
}

void write_manifest(const StreamManifest& m, const std::filesystem::path& path) {
  ad::TensorArchive archive;
  archive.metadata = fmt::format("features split={}", m.split);
  std::string body;
  for (const Segment& s : m.segments) {
    if (s.features.size() != s.frames * m.config.d_feat) {
      throw std::invalid_argument(fmt::format("segment {} feature size mismatch", s.key()));
    }
    archive.entries.emplace_back(s.key(), ad::StoredTensor{{s.frames, m.config.d_feat}, s.features});
    body += segment_record(s).dump();
    body += '\n';
  }
  const std::string feature_bytes = archive.serialize();
  const json header{{"format", kFormat},
                    {"version", StreamManifest::kFormatVersion},
                    {"split", m.split},
                    {"config", to_json(m.config)},
                    {"lexicon", to_json(m.lexicon)},
                    {"segments", m.segments.size()},
                    {"body_crc32", ad::crc32_of(body)},
                    {"features_file", features_path(path).filename().string()},
                    {"features_crc32", ad::crc32_of(feature_bytes)}};
  write_file_atomic(features_path(path), feature_bytes);
  write_file_atomic(path, header.dump() + "\n" + body);
}

StreamManifest read_manifest(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  const std::size_t eol = text.find('\n');
  if (eol == std::string::npos) throw IntegrityError(fmt::format("manifest '{}' has no header line", path.string()));
  json header;
  try {
    header = json::parse(text.substr(0, eol));
  } catch (const json::exception& e) {
    throw IntegrityError(fmt::format("manifest '{}' header unreadable: {}", path.string(), e.what()));
  }
  if (!header.is_object() || header.value("format", "") != kFormat) {
    throw IntegrityError(fmt::format("'{}' is not a stream manifest", path.string()));
  }
  const int version = header.value("version", -1);
  if (version != StreamManifest::kFormatVersion) {
    throw FormatVersionError(fmt::format("manifest '{}' has format version {}, expected {}", path.string(),
                                         version, StreamManifest::kFormatVersion));
  }
  const std::string body = text.substr(eol + 1);
  if (ad::crc32_of(body) != header.at("body_crc32").get<std::uint32_t>()) {
    throw IntegrityError(fmt::format("manifest '{}' body checksum mismatch (truncated or modified)", path.string()));
  }

  StreamManifest m;
  try {
    m.split = header.at("split").get<std::string>();
    m.config = corpus_config_from_json(header.at("config"));
    m.lexicon = lexicon_from_json(header.at("lexicon"));
    std::istringstream lines(body);
    std::string line;
    while (std::getline(lines, line)) {
      if (!line.empty()) m.segments.push_back(parse_segment(json::parse(line)));
    }
  } catch (const json::exception& e) {
    throw IntegrityError(fmt::format("manifest '{}' malformed: {}", path.string(), e.what()));
  }
  if (m.segments.size() != header.at("segments").get<std::size_t>()) {
    throw IntegrityError(fmt::format("manifest '{}' lists {} segments, header says {}", path.string(),
                                     m.segments.size(), header.at("segments").get<std::size_t>()));
  }

  const auto feature_file = path.parent_path() / header.at("features_file").get<std::string>();
  const std::string feature_bytes = read_file(feature_file);
  if (ad::crc32_of(feature_bytes) != header.at("features_crc32").get<std::uint32_t>()) {
    throw IntegrityError(fmt::format("feature file '{}' does not match its manifest", feature_file.string()));
  }
  const ad::TensorArchive archive = ad::TensorArchive::deserialize(feature_bytes);
  for (Segment& s : m.segments) {
    if (!archive.contains(s.key())) throw IntegrityError(fmt::format("features missing for segment {}", s.key()));
    const ad::StoredTensor& t = archive.get(s.key());
    if (t.shape != ad::Shape{s.frames, m.config.d_feat}) {
      throw IntegrityError(fmt::format("features for segment {} have shape {}", s.key(), ad::shape_string(t.shape)));
    }
    s.features = t.values;
  }
  return m;
}

}  // namespace genctx::data
