#include <gtest/gtest.h>

#include "genctx/data/corpus.h"
#include "genctx/models/tokenizer.h"

namespace genctx::models {
namespace {

TEST(SplitWords, LowercasesAndCollapsesWhitespace) {
  EXPECT_EQ(split_words("  The Cat\tsat\n "), (std::vector<std::string>{"the", "cat", "sat"}));
  EXPECT_TRUE(split_words("   ").empty());
}

TEST(TextTokenizer, ReservedIdsAndUnknownWords) {
  const TextTokenizer tok({"alpha", "beta"});
  EXPECT_EQ(tok.size(), 4u);
  EXPECT_EQ(tok.vocabulary()[TextTokenizer::kCls], "[cls]");
  EXPECT_EQ(tok.encode("beta ALPHA gamma"), (std::vector<int>{3, 2, TextTokenizer::kUnk}));
  EXPECT_TRUE(tok.encode("").empty());
  EXPECT_THROW(TextTokenizer({"a", "a"}), std::invalid_argument);
}

TEST(TextTokenizer, CoversEveryTranscriptWord) {
  const data::Lexicon lex = data::build_lexicon(20, 8, 1);
  const TextTokenizer tok = TextTokenizer::for_lexicon(lex);
  for (const auto& w : lex.transcript_words()) EXPECT_NE(tok.encode(w).at(0), TextTokenizer::kUnk) << w;
  for (const auto& w : data::generator_filler_words()) EXPECT_NE(tok.encode(w).at(0), TextTokenizer::kUnk) << w;
}

TEST(OutputLabels, TargetsForAsrAndNer) {
  const data::Lexicon lex = data::build_lexicon(4, 2, 1);
  const OutputLabels labels = OutputLabels::for_lexicon(lex);
  data::Segment seg;
  const auto& topic = lex.topics[0];
  seg.words = {"the", topic.keyword, "and"};
  seg.entities = {{topic.keyword, topic.tag}};
  EXPECT_EQ(labels.target(seg, TaskKind::Asr),
            (std::vector<int>{labels.id("the"), labels.id(topic.keyword), labels.id("and")}));
  EXPECT_EQ(labels.target(seg, TaskKind::Ner),
            (std::vector<int>{labels.id("the"), labels.id(data::entity_open(topic.tag)), labels.id(topic.keyword),
                              labels.id(data::entity_close(topic.tag)), labels.id("and")}));
  EXPECT_THROW(labels.target(seg, TaskKind::Sentiment), std::invalid_argument);
  EXPECT_THROW(labels.id("zzz"), std::out_of_range);
}

TEST(OutputLabels, DecodingDropsBlanksAndMarkers) {
  const OutputLabels labels({"<blank>", "a", "b", "<LOC>", "</LOC>", "<PER>", "</PER>"});
  const std::vector<int> ids{1, 0, 3, 2, 1, 4, 5, 2};
  EXPECT_EQ(decoded_words(labels, ids), (std::vector<std::string>{"a", "b", "a", "b"}));
  // "<PER> b" never closes, so only the LOC span survives
  EXPECT_EQ(decoded_entities(labels, ids), (std::vector<data::EntityPair>{{"b a", "LOC"}}));
  EXPECT_TRUE(decoded_entities(labels, std::vector<int>{3, 4}).empty());
  EXPECT_TRUE(decoded_entities(labels, std::vector<int>{3, 1, 6}).empty());
}

TEST(OutputLabels, MarkerPredicate) {
  EXPECT_TRUE(is_entity_marker("<LOC>"));
  EXPECT_TRUE(is_entity_marker("</LOC>"));
  EXPECT_FALSE(is_entity_marker("<blank>"));
  EXPECT_FALSE(is_entity_marker("loc"));
}

TEST(TaskNames, RoundTrip) {
  for (TaskKind t : {TaskKind::Asr, TaskKind::Ner, TaskKind::Sentiment}) EXPECT_EQ(parse_task(task_name(t)), t);
  EXPECT_THROW(parse_task("pos"), std::invalid_argument);
}

}  // namespace
}  // namespace genctx::models
