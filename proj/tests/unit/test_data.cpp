#include <gtest/gtest.h>

#include <fstream>
#include <map>
#include <set>

#include "genctx/data/corpus.h"
#include "genctx/data/manifest.h"
#include "genctx/io.h"
#include "support/gen.h"

namespace genctx::data {
namespace {

using testing::TempDir;

CorpusConfig tiny(std::uint64_t seed = 1) {
  CorpusConfig c;
  c.n_topics = 4;
  c.train_streams = 5;
  c.eval_streams = 2;
  c.segments_per_stream = 4;
  c.tokens_per_segment = 6;
  c.seed = seed;
  return c;
}

TEST(Corpus, CountsAndIndices) {
  const Corpus corpus = generate_corpus(tiny());
  EXPECT_EQ(corpus.train.segments.size(), 20u);
  EXPECT_EQ(corpus.eval.segments.size(), 8u);
  std::map<int, std::vector<int>> by_stream;
  for (const auto& s : corpus.train.segments) by_stream[s.stream].push_back(s.index);
  ASSERT_EQ(by_stream.size(), 5u);
  for (const auto& [stream, idx] : by_stream) EXPECT_EQ(idx, (std::vector<int>{0, 1, 2, 3})) << stream;
}

TEST(Corpus, RegenerationIsDeterministic) {
  EXPECT_EQ(generate_corpus(tiny(3)).train, generate_corpus(tiny(3)).train);
  EXPECT_NE(generate_corpus(tiny(3)).train, generate_corpus(tiny(4)).train);
}

TEST(Corpus, SplitsAreDisjointByStream) {
  const Corpus corpus = generate_corpus(tiny());
  std::set<int> train;
  for (int s : corpus.train.stream_ids()) train.insert(s);
  for (int s : corpus.eval.stream_ids()) EXPECT_EQ(train.count(s), 0u);
}

TEST(Corpus, SegmentInvariants) {
  const Corpus corpus = generate_corpus(CorpusConfig{});
  const Lexicon& lex = corpus.train.lexicon;
  for (const StreamManifest* m : {&corpus.train, &corpus.eval}) {
    for (const Segment& s : m->segments) {
      ASSERT_EQ(s.words.size(), 12u);
      ASSERT_EQ(s.ambiguous.size(), s.words.size());
      ASSERT_EQ(s.word_frames.size(), s.words.size());
      std::size_t frames = 0;
      for (std::size_t w : s.word_frames) frames += w;
      EXPECT_EQ(frames, s.frames);
      EXPECT_GE(s.frames, s.words.size());
      EXPECT_EQ(s.features.size(), s.frames * 16);
      EXPECT_EQ(s.sentiment, s.topic % 3);
      const Topic& topic = lex.topics[static_cast<std::size_t>(s.topic)];
      for (std::size_t i = 0; i < s.words.size(); ++i) {
        if (i > 0) EXPECT_NE(s.words[i], s.words[i - 1]);
        const int cw = lex.codeword_of(s.words[i]);
        EXPECT_EQ(s.ambiguous[i], cw >= 0);
        if (cw >= 0) EXPECT_EQ(s.words[i], lex.ambiguous[static_cast<std::size_t>(cw)].label_for(s.topic));
      }
      for (const auto& e : s.entities) {
        EXPECT_EQ(e.phrase, topic.keyword);
        EXPECT_EQ(e.tag, topic.tag);
      }
    }
  }
}

TEST(Corpus, StreamsKeepOneTopic) {
  const Corpus corpus = generate_corpus(tiny());
  std::map<int, int> topic;
  for (const auto& s : corpus.train.segments) {
    auto [it, fresh] = topic.emplace(s.stream, s.topic);
    if (!fresh) EXPECT_EQ(it->second, s.topic);
  }
}

TEST(Lexicon, CodewordsAreBalancedAndDisagree) {
  const Lexicon lex = build_lexicon(20, 8, 1);
  ASSERT_EQ(lex.ambiguous.size(), 8u);
  for (const auto& cw : lex.ambiguous) {
    ASSERT_EQ(cw.choice_by_topic.size(), 20u);
    std::size_t ones = 0;
    for (int t = 0; t < 20; t += 2) {
      EXPECT_NE(cw.choice_by_topic[t], cw.choice_by_topic[t + 1]);
      ones += cw.choice_by_topic[t] + cw.choice_by_topic[t + 1];
    }
    EXPECT_EQ(ones, 10u);
  }
  EXPECT_THROW(build_lexicon(1000, 8, 1), std::invalid_argument);
}

TEST(Lexicon, OutputLabelsStartWithBlankAndAreUnique) {
  const Lexicon lex = build_lexicon(6, 4, 2);
  const auto labels = lex.output_labels();
  EXPECT_EQ(labels.front(), Lexicon::kBlank);
  EXPECT_EQ(std::set<std::string>(labels.begin(), labels.end()).size(), labels.size());
  EXPECT_EQ(entity_open("LOC"), "<LOC>");
  EXPECT_EQ(entity_close("LOC"), "</LOC>");
}

TEST(Codebook, HomophonesShareMeans) {
  const CorpusConfig c;
  const Lexicon lex = build_lexicon(c.n_topics, c.n_codewords, c.seed);
  const FeatureCodebook book = build_codebook(c, lex);
  for (const auto& cw : lex.ambiguous) {
    EXPECT_EQ(book.means[book.index_of(cw.labels[0])], book.means[book.index_of(cw.labels[1])]);
  }
  // every other pair of words is distinguishable
  std::set<std::vector<double>> distinct;
  for (const auto& m : book.means) distinct.insert(m);
  EXPECT_EQ(distinct.size(), book.means.size() - lex.ambiguous.size());
}

TEST(Codebook, ContextFreeBayesIsAtChance) {
  // Label each ambiguous frame with the codebook's nearest word; the shared
  // mean makes that the same label for every topic.
  const Corpus corpus = generate_corpus(CorpusConfig{});
  std::size_t right = 0, total = 0;
  for (const StreamManifest* m : {&corpus.train, &corpus.eval}) {
    for (const Segment& s : m->segments) {
      std::size_t frame = 0;
      for (std::size_t w = 0; w < s.words.size(); ++w) {
        if (s.ambiguous[w]) {
          const double* x = s.features.data() + frame * m->config.d_feat;
          right += corpus.codebook.nearest(x) == s.words[w];
          ++total;
        }
        frame += s.word_frames[w];
      }
    }
  }
  ASSERT_GT(total, 500u);
  const double acc = 100.0 * static_cast<double>(right) / static_cast<double>(total);
  EXPECT_NEAR(acc, 50.0, 3.0);
}

TEST(Codebook, UnambiguousFramesDecode) {
  const Corpus corpus = generate_corpus(tiny());
  std::size_t right = 0, total = 0;
  for (const Segment& s : corpus.train.segments) {
    std::size_t frame = 0;
    for (std::size_t w = 0; w < s.words.size(); ++w) {
      if (!s.ambiguous[w]) {
        right += corpus.codebook.nearest(s.features.data() + frame * 16) == s.words[w];
        ++total;
      }
      frame += s.word_frames[w];
    }
  }
  EXPECT_EQ(right, total);
}

TEST(PreviousText, BoundaryCases) {
  const Corpus corpus = generate_corpus(tiny());
  const auto& m = corpus.train;
  const int stream = m.segments.front().stream;
  EXPECT_FALSE(previous_text_of(m, stream, 0).has_value());
  EXPECT_EQ(*previous_text_of(m, stream, 3), m.segment(stream, 2).transcript());
  EXPECT_THROW(previous_text_of(m, stream, 4), std::out_of_range);
  EXPECT_THROW(previous_text_of(m, 999, 0), std::out_of_range);
}

TEST(PreviousText, ExhaustiveScan) {
  const Corpus corpus = generate_corpus(CorpusConfig{});
  for (const StreamManifest* m : {&corpus.train, &corpus.eval}) {
    for (const Segment& s : m->segments) {
      if (s.index == 0) continue;
      EXPECT_EQ(*previous_text_of(*m, s.stream, s.index), m->segment(s.stream, s.index - 1).transcript());
    }
  }
}

TEST(CorpusConfig, RejectsDegenerateConfigs) {
  CorpusConfig c = tiny();
  c.n_topics = 1;
  EXPECT_THROW(generate_corpus(c), std::invalid_argument);
  c = tiny();
  c.train_streams = c.eval_streams = 0;
  EXPECT_THROW(generate_corpus(c), std::invalid_argument);
  c = tiny();
  c.ambiguity_rate = 1.5;
  EXPECT_THROW(generate_corpus(c), std::invalid_argument);
  c = tiny();
  c.ambiguity_rate = 0.6;
  c.topical_rate = 0.6;
  EXPECT_THROW(generate_corpus(c), std::invalid_argument);
}

TEST(Manifest, RoundTrip) {
  TempDir dir("manifest");
  const Corpus corpus = generate_corpus(tiny(5));
  write_manifest(corpus.train, dir / "train.jsonl");
  EXPECT_TRUE(std::filesystem::exists(features_path(dir / "train.jsonl")));
  EXPECT_EQ(read_manifest(dir / "train.jsonl"), corpus.train);
}

TEST(Manifest, DetectsTruncationAndEdits) {
  TempDir dir("manifest-bad");
  const auto path = dir / "train.jsonl";
  write_manifest(generate_corpus(tiny(6)).train, path);
  const std::string bytes = read_file(path);

  write_file_atomic(path, bytes.substr(0, bytes.size() - 40));
  EXPECT_THROW(read_manifest(path), IntegrityError);

  std::string edited = bytes;
  const auto pos = edited.rfind("\"the\"");
  ASSERT_NE(pos, std::string::npos);
  edited.replace(pos, 5, "\"and\"");
  write_file_atomic(path, edited);
  EXPECT_THROW(read_manifest(path), IntegrityError);

  write_file_atomic(path, bytes);
  const std::string features = read_file(features_path(path));
  write_file_atomic(features_path(path), features.substr(0, features.size() / 2));
  EXPECT_THROW(read_manifest(path), IntegrityError);
}

TEST(Manifest, RejectsUnknownVersionAndForeignFiles) {
  TempDir dir("manifest-ver");
  const auto path = dir / "train.jsonl";
  write_manifest(generate_corpus(tiny(7)).train, path);
  std::string bytes = read_file(path);
  const auto pos = bytes.find("\"version\":1");
  ASSERT_NE(pos, std::string::npos) << bytes.substr(0, 200);
  bytes.replace(pos, 11, "\"version\":7");
  write_file_atomic(path, bytes);
  EXPECT_THROW(read_manifest(path), FormatVersionError);

  write_file_atomic(path, "{\"hello\":1}\n");
  EXPECT_THROW(read_manifest(path), IntegrityError);
  EXPECT_THROW(read_manifest(dir / "missing.jsonl"), IoError);
}

}  // namespace
}  // namespace genctx::data
