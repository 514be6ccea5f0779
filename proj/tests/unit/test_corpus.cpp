#include <gtest/gtest.h>

#include <sstream>

#include "clcts/corpus.hpp"
#include "clcts/error.hpp"
#include "test_util.hpp"

using namespace clcts;

namespace {

std::string pair_json(const std::string& id, const std::string& src = "de-hist", const std::string& tgt = "en",
                      int year = 1800) {
  return R"({"id":")" + id + R"(","title":"T","author":"A","year":)" + std::to_string(year) +
         R"(,"lang_src":")" + src + R"(","lang_tgt":")" + tgt +
         R"(","document":"Ein Text.","summary":"A text.","summary_translated":false,"provenance":"p"})";
}

std::string error_of(const std::string& text, Direction d = Direction::kHDeEn) {
  std::istringstream in(text);
  try {
    parse_corpus(in, "c.jsonl", "c", d);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Direction, ParseAndLanguages) {
  EXPECT_EQ(parse_direction("hEn-De"), Direction::kHEnDe);
  EXPECT_EQ(source_language(Direction::kHEnDe), "en");
  EXPECT_EQ(target_language(Direction::kHEnDe), "de");
  EXPECT_TRUE(is_cross_lingual(Direction::kHDeEn));
  EXPECT_FALSE(is_cross_lingual(Direction::kHDeDe));
  EXPECT_THROW(parse_direction("de-en"), ValidationError);
  EXPECT_EQ(base_language("DE-hist"), "de");
}

TEST(Corpus, LoadsFixture) {
  const auto c = load_corpus(testutil::fixture("mini_hde_en.jsonl"), Direction::kHDeEn);
  EXPECT_EQ(c.name(), "mini_hde_en");
  EXPECT_EQ(c.size(), 5u);
  ASSERT_NE(c.find("hde-003"), nullptr);
  EXPECT_EQ(c.find("hde-003")->year, 1848);
  EXPECT_EQ(c.find("nope"), nullptr);
}

TEST(Corpus, RoundTrip) {
  const auto c = load_corpus(testutil::fixture("mini_hde_en.jsonl"), Direction::kHDeEn);
  std::ostringstream out;
  write_corpus(out, c);
  std::istringstream in(out.str());
  const auto again = parse_corpus(in, "rt", "mini_hde_en", Direction::kHDeEn);
  EXPECT_EQ(again.pairs(), c.pairs());
}

TEST(Corpus, DuplicateIdCitesBothLines) {
  const auto err = error_of(pair_json("a") + "\n" + pair_json("b") + "\n" + pair_json("a") + "\n");
  EXPECT_NE(err.find("lines 1 and 3"), std::string::npos) << err;
}

TEST(Corpus, RejectsDirectionMismatch) {
  const auto err = error_of(pair_json("a", "en", "de"));
  EXPECT_NE(err.find("c.jsonl:1"), std::string::npos) << err;
  EXPECT_NE(err.find("direction mismatch"), std::string::npos) << err;
}

TEST(Corpus, RejectsUnknownKeysAndBadTypes) {
  EXPECT_NE(error_of(R"({"id":"x","extra":1})").find("c.jsonl:1"), std::string::npos);
  auto bad_year = pair_json("a");
  bad_year.replace(bad_year.find("1800"), 4, "\"1800\"");
  EXPECT_NE(error_of(bad_year).find("year"), std::string::npos);
  EXPECT_NE(error_of("not json\n").find("c.jsonl:1"), std::string::npos);
  EXPECT_FALSE(error_of("").empty());
}

TEST(Corpus, ExternalAcceptsAnyLanguagePair) {
  std::istringstream in(pair_json("a", "fr", "en"));
  EXPECT_EQ(parse_corpus(in, "x", "x", Direction::kExternal).size(), 1u);
}

TEST(Embeddings, FixtureHeaderAndVectors) {
  const auto t = ingest_embeddings(testutil::fixture("mini_hde_en.embeddings.jsonl"));
  EXPECT_EQ(t.model(), "fixture-encoder-v1");
  EXPECT_EQ(t.dimension(), 6u);
  EXPECT_EQ(t.documents().size(), 5u);
  const auto* d = t.find("hde-001");
  ASSERT_NE(d, nullptr);
  EXPECT_EQ(d->document.size(), 5u);
  EXPECT_EQ(d->summary.size(), 2u);
}

TEST(Embeddings, RejectsDimensionMismatchAndGaps) {
  std::istringstream wrong_dim(R"({"model":"m","dimension":2}
{"doc_id":"a","side":"document","sent_idx":0,"vector":[1,2,3]})");
  EXPECT_THROW(parse_embeddings(wrong_dim, "e"), ValidationError);
  std::istringstream gap(R"({"doc_id":"a","side":"document","sent_idx":1,"vector":[1,2]})");
  EXPECT_THROW(parse_embeddings(gap, "e"), ValidationError);
}

TEST(Scores, ParseWriteRoundTrip) {
  const auto t = ingest_scores(testutil::fixture("mini_scores.csv"));
  EXPECT_EQ(t.size(), 30u);
  EXPECT_EQ(t.metrics(), (std::set<std::string>{"BERTScore-F1", "NLI-D"}));
  std::ostringstream out;
  write_scores(out, t, true);
  std::istringstream in(out.str());
  const auto again = parse_scores(in, "rt");
  EXPECT_EQ(again.size(), t.size());
  EXPECT_EQ(again.find("hde-002", "sys-b", "NLI-D"), t.find("hde-002", "sys-b", "NLI-D"));
}

TEST(Scores, DuplicateKeyRejected) {
  std::istringstream in("doc_id,system_id,metric_name,value\na,s,m,1\na,s,m,2\n");
  EXPECT_THROW(parse_scores(in, "s.csv"), ValidationError);
}

TEST(Annotations, GridEnforced) {
  EXPECT_TRUE(is_valid_rating(1));
  EXPECT_TRUE(is_valid_rating(4.5));
  EXPECT_FALSE(is_valid_rating(4.25));
  EXPECT_FALSE(is_valid_rating(0.5));
  EXPECT_FALSE(is_valid_rating(5.5));
  std::istringstream in(
      "doc_id,system_id,rater_id,rater_kind,coherence,consistency,fluency,relevance\nd,s,r,human,3,3.3,3,3\n");
  EXPECT_THROW(parse_annotations(in, "a.csv"), ValidationError);
}

TEST(Annotations, FixtureLoads) {
  const auto recs = ingest_annotations(testutil::fixture("mini_annotations.csv"));
  EXPECT_EQ(recs.size(), 60u);
  EXPECT_EQ(recs.front().rater_kind, RaterKind::kHuman);
}

TEST(FormatDouble, ShortestRoundTrip) {
  EXPECT_EQ(format_double(0.5), "0.5");
  EXPECT_EQ(format_double(0.1 + 0.2), "0.30000000000000004");
  EXPECT_EQ(parse_double("1e-07", "v"), 1e-07);
  EXPECT_THROW(parse_double("1.0x", "v"), ValidationError);
}
