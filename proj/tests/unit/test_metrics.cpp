#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "genctx/context/oracle.h"
#include "genctx/metrics/classification.h"
#include "genctx/metrics/report.h"
#include "genctx/metrics/rouge.h"
#include "genctx/metrics/wer.h"
#include "genctx/models/tokenizer.h"
#include "support/gen.h"

namespace genctx::metrics {
namespace {

using data::EntityPair;
using models::split_words;

// Exhaustive oracle: minimum edits over every alignment, by plain recursion.
std::size_t brute_edits(const Words& r, std::size_t i, const Words& h, std::size_t j) {
  if (i == r.size()) return h.size() - j;
  if (j == h.size()) return r.size() - i;
  return std::min({brute_edits(r, i + 1, h, j) + 1, brute_edits(r, i, h, j + 1) + 1,
                   brute_edits(r, i + 1, h, j + 1) + (r[i] == h[j] ? 0 : 1)});
}

TEST(Wer, GoldenCases) {
  EXPECT_EQ(wer({"a", "b", "c"}, {"a", "b", "c"}), 0.0);
  EXPECT_EQ(wer({"a", "b", "c"}, {}), 100.0);
  EXPECT_NEAR(wer({"a", "b", "c"}, {"a", "x", "c", "d"}), 66.67, 0.005);
  EXPECT_DOUBLE_EQ(wer({"a", "b", "c"}, {"a", "x", "c", "d"}), 200.0 / 3.0);
  EXPECT_THROW(wer({}, {"a"}), std::invalid_argument);
}

TEST(Wer, MatchesExhaustiveAlignment) {
  Rng rng(1);
  const std::vector<std::string> vocab{"a", "b", "c"};
  for (int trial = 0; trial < 300; ++trial) {
    const Words r = testing::random_words(rng, rng.below(6), vocab);
    const Words h = testing::random_words(rng, rng.below(6), vocab);
    EXPECT_EQ(edit_distance(r, h), brute_edits(r, 0, h, 0));
  }
}

TEST(Wer, MetricProperties) {
  Rng rng(2);
  const std::vector<std::string> vocab{"a", "b", "c", "d"};
  for (int trial = 0; trial < 200; ++trial) {
    const Words x = testing::random_words(rng, rng.below(7), vocab);
    const Words y = testing::random_words(rng, rng.below(7), vocab);
    const Words z = testing::random_words(rng, rng.below(7), vocab);
    EXPECT_EQ(edit_distance(x, y), edit_distance(y, x));
    EXPECT_LE(edit_distance(x, z), edit_distance(x, y) + edit_distance(y, z));
    EXPECT_EQ(edit_distance(x, x), 0u);
    EXPECT_GE(edit_distance(x, y), x.size() > y.size() ? x.size() - y.size() : y.size() - x.size());
  }
}

TEST(Wer, MatchedReferencePositions) {
  EXPECT_EQ(matched_reference({"a", "b", "c"}, {"a", "x", "c", "d"}), (std::vector<bool>{true, false, true}));
  EXPECT_EQ(matched_reference({"a", "b"}, {}), (std::vector<bool>{false, false}));
  Rng rng(3);
  const std::vector<std::string> vocab{"a", "b", "c"};
  for (int trial = 0; trial < 200; ++trial) {
    const Words r = testing::random_words(rng, 1 + rng.below(6), vocab);
    const Words h = testing::random_words(rng, rng.below(6), vocab);
    const auto m = matched_reference(r, h);
    const std::size_t matched = static_cast<std::size_t>(std::count(m.begin(), m.end(), true));
    // a minimal alignment has max(|r|,|h|) - matches <= edits, and matches never exceed |h|
    EXPECT_LE(matched, h.size());
    EXPECT_GE(matched + edit_distance(r, h), std::max(r.size(), h.size()));
  }
}

TEST(Wer, CorpusCounterSumsBeforeDividing) {
  ErrorCounter c;
  c.add({"a", "b", "c"}, {"a", "x", "c", "d"});
  c.add({"a"}, {"a"});
  EXPECT_EQ(c.edits, 2u);
  EXPECT_EQ(c.reference_words, 4u);
  EXPECT_DOUBLE_EQ(c.percent(), 50.0);
}

TEST(NerF1, GoldenCases) {
  EXPECT_DOUBLE_EQ(ner_pair_f1({{"john", "PER"}}, {{"john", "PER"}}).f1, 1.0);
  const PrfScore half = ner_pair_f1({{"john", "PER"}, {"paris", "LOC"}}, {{"john", "PER"}, {"london", "LOC"}});
  EXPECT_DOUBLE_EQ(half.precision, 0.5);
  EXPECT_DOUBLE_EQ(half.recall, 0.5);
  EXPECT_DOUBLE_EQ(half.f1, 0.5);
  EXPECT_DOUBLE_EQ(ner_pair_f1({}, {}).f1, 1.0);
  EXPECT_DOUBLE_EQ(ner_pair_f1({{"a", "PER"}}, {}).f1, 0.0);
}

TEST(NerF1, MultisetAndOrderInsensitive) {
  const PrfScore s = ner_pair_f1({{"a", "PER"}, {"a", "PER"}, {"b", "LOC"}}, {{"b", "LOC"}, {"a", "PER"}});
  EXPECT_EQ(s.true_positives, 2u);
  EXPECT_DOUBLE_EQ(s.precision, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(s.recall, 1.0);
  // a matching phrase with the wrong tag is no match
  EXPECT_EQ(ner_pair_f1({{"a", "LOC"}}, {{"a", "PER"}}).true_positives, 0u);
}

TEST(NerF1, SwapExchangesPrecisionAndRecall) {
  Rng rng(4);
  const std::vector<EntityPair> pool{{"a", "PER"}, {"b", "LOC"}, {"c", "ORG"}, {"a", "LOC"}};
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<EntityPair> p, g;
    for (std::size_t i = rng.below(4); i > 0; --i) p.push_back(pool[rng.below(pool.size())]);
    for (std::size_t i = 1 + rng.below(4); i > 0; --i) g.push_back(pool[rng.below(pool.size())]);
    const PrfScore ab = ner_pair_f1(p, g), ba = ner_pair_f1(g, p);
    EXPECT_DOUBLE_EQ(ab.precision, ba.recall);
    EXPECT_DOUBLE_EQ(ab.recall, ba.precision);
    EXPECT_DOUBLE_EQ(ab.f1, ba.f1);
  }
}

TEST(NerF1, CorpusIsMicroAveraged) {
  const PrfScore s = ner_pair_f1_corpus({{{"a", "PER"}}, {{"b", "LOC"}, {"c", "ORG"}}},
                                        {{{"a", "PER"}}, {{"x", "LOC"}}});
  EXPECT_EQ(s.true_positives, 1u);
  EXPECT_EQ(s.predicted, 3u);
  EXPECT_EQ(s.gold, 2u);
  EXPECT_DOUBLE_EQ(s.f1, 2 * (1.0 / 3) * 0.5 / (1.0 / 3 + 0.5));
  EXPECT_THROW(ner_pair_f1_corpus({{}}, {}), std::invalid_argument);
}

TEST(MacroF1, GoldenCases) {
  const std::vector<int> g{0, 1, 2, 0, 1, 2};
  EXPECT_DOUBLE_EQ(macro_f1(g, g), 1.0);
  EXPECT_NEAR(macro_f1(std::vector<int>{0, 1}, std::vector<int>{0, 1}), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(macro_f1(std::vector<int>{0, 1}, std::vector<int>{0, 1}), 0.667, 5e-4);
  // predicting class 0 everywhere on a balanced set: F1_0 = 2*(1/3)*1/(4/3) = 0.5, others 0
  const std::vector<int> all0(6, 0);
  EXPECT_NEAR(macro_f1(all0, g), 0.5 / 3.0, 1e-15);
  EXPECT_THROW(macro_f1(std::vector<int>{0}, std::vector<int>{0, 1}), std::invalid_argument);
  EXPECT_THROW(macro_f1(std::vector<int>{3}, std::vector<int>{0}), std::invalid_argument);
}

TEST(Rouge, GoldenCases) {
  EXPECT_DOUBLE_EQ(rouge1_f("the cat", "the cat"), 1.0);
  EXPECT_DOUBLE_EQ(rouge1_f("a b", "c d"), 0.0);
  const RougeScore s = rouge1("the cat sat", "the cat ran fast");
  EXPECT_DOUBLE_EQ(s.precision, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(s.recall, 0.5);
  EXPECT_NEAR(s.f, 0.5714, 5e-5);
  EXPECT_DOUBLE_EQ(rouge1_f("", "a"), 0.0);
  EXPECT_DOUBLE_EQ(rouge1_f("a", ""), 0.0);
}

TEST(Rouge, ClippedCountsAndCase) {
  // "the" appears twice in the candidate but once in the reference
  const RougeScore s = rouge1("The the cat", "the CAT");
  EXPECT_DOUBLE_EQ(s.precision, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(s.recall, 1.0);
}

TEST(Report, SeedStatistics) {
  MetricReport r{"wer", "eval", {}, {}};
  r.add(1, 10.0);
  r.add(2, 20.0);
  r.add(3, 30.0);
  EXPECT_DOUBLE_EQ(r.mean(), 20.0);
  EXPECT_DOUBLE_EQ(r.stddev(), std::sqrt(200.0 / 3.0));  // population, not sample
  const auto j = r.to_json();
  EXPECT_EQ(j.at("seeds").size(), 3u);
  EXPECT_DOUBLE_EQ(j.at("mean").get<double>(), 20.0);
}

TEST(Report, MeanIsRecomputableFromValues) {
  Rng rng(5);
  MetricReport r{"x", "eval", {}, {}};
  for (std::uint64_t s = 0; s < 7; ++s) r.add(s, rng.uniform(0, 100));
  EXPECT_NEAR(r.mean(), std::accumulate(r.values.begin(), r.values.end(), 0.0) / 7.0, 1e-12);
}

data::StreamManifest tiny_manifest() {
  data::CorpusConfig c;
  c.n_topics = 4;
  c.train_streams = 4;
  c.eval_streams = 0;
  c.segments_per_stream = 5;
  return data::generate_corpus(c).train;
}

TEST(ContextReport, IdentityTextsScoreOne) {
  const auto m = tiny_manifest();
  ContextSource same{"echo-next", {}};
  for (const auto& s : m.segments) {
    if (const auto* next = m.find(s.stream, s.index + 1)) same.texts[s.key()] = next->transcript();
  }
  const auto rows = context_report(m, {same});
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_DOUBLE_EQ(rows[0].rouge1, 1.0);
  EXPECT_EQ(rows[0].pairs, 16u);
  EXPECT_DOUBLE_EQ(rows[0].mean_words, 12.0);
}

TEST(ContextReport, MissingGenerationIsAnError) {
  const auto m = tiny_manifest();
  ContextSource empty{"P4", {}};
  EXPECT_THROW(context_report(m, {empty}), std::invalid_argument);
}

TEST(ContextReport, OracleOverlapOrdersPrompts) {
  const auto m = tiny_manifest();
  context::OracleConfig cfg;
  std::vector<ContextSource> sources;
  for (context::PromptId p : context::kAllPrompts) {
    ContextSource src{context::prompt_name(p), {}};
    for (const auto& s : m.segments) src.texts[s.key()] = context::oracle_generate(m.lexicon, p, s.topic, s.key(), cfg);
    sources.push_back(std::move(src));
  }
  const auto rows = context_report(m, sources);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_GT(rows[0].rouge1, rows[3].rouge1);
  const std::string table = format_context_report(rows);
  EXPECT_NE(table.find("P1"), std::string::npos);
  EXPECT_NE(table.find("ROUGE"), std::string::npos) << table;
}

TEST(Table, AlignsColumns) {
  const std::string t = format_table({"a", "long header"}, {{"xyz", "1"}});
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < t.size()) {
    const auto end = t.find('\n', start);
    lines.push_back(t.substr(start, end - start));
    if (end == std::string::npos) break;
    start = end + 1;
  }
  ASSERT_GE(lines.size(), 2u);
  EXPECT_EQ(lines[0].size(), lines.back().size());  // right-aligned numeric column
}

}  // namespace
}  // namespace genctx::metrics
