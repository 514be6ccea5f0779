#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "clcts/error.hpp"
#include "clcts/syntax.hpp"
#include "test_util.hpp"

using namespace clcts;

namespace {

std::vector<ParsedDocument> parse(const std::string& text) {
  std::istringstream in(text);
  return parse_conllu(in, "t.conllu");
}

std::string row(int id, const std::string& form, const std::string& upos, int head) {
  return std::to_string(id) + "\t" + form + "\t_\t" + upos + "\t_\t_\t" + std::to_string(head) + "\tdep\t_\t_\n";
}

}  // namespace

TEST(Conllu, DocumentsMultiwordAndEmptyNodes) {
  const auto docs = parse("# newdoc id = d1\n" + row(1, "Er", "PRON", 2) + "2-3\tzum\t_\t_\t_\t_\t_\t_\t_\t_\n" +
                          row(2, "ging", "VERB", 0) + "2.1\tx\t_\tX\t_\t_\t_\t_\t_\t_\n" + row(3, ".", "PUNCT", 2) +
                          "\n# doc_id = d2\n" + row(1, "Ja", "INTJ", 0) + "\n");
  ASSERT_EQ(docs.size(), 2u);
  EXPECT_EQ(docs[0].doc_id, "d1");
  EXPECT_EQ(docs[0].sentences[0].size(), 3u);
  EXPECT_EQ(docs[1].doc_id, "d2");
}

TEST(Conllu, InvariantViolationsCiteLine) {
  auto err = [](const std::string& text) {
    try {
      parse(text);
    } catch (const ValidationError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_NE(err("# c\n" + row(1, "a", "X", 0) + row(3, "b", "X", 1)).find("t.conllu:2"), std::string::npos);
  EXPECT_NE(err(row(1, "a", "X", 0) + row(2, "b", "X", 5)).find("dangling"), std::string::npos);
  EXPECT_NE(err(row(1, "a", "X", 0) + row(2, "b", "X", 0)).find("2 roots"), std::string::npos);
  EXPECT_NE(err(row(1, "a", "X", 1)).find("own head"), std::string::npos);
  EXPECT_NE(err("1\ta\tb\n").find("10 tab-separated"), std::string::npos);
}

TEST(Mdd, HandComputed) {
  // 1 <- 2 (root) -> 4, 3 -> 4, 5 punct -> 2
  const ParsedSentence s({{1, "a", "NOUN", 2, ""},
                          {2, "b", "VERB", 0, ""},
                          {3, "c", "ADJ", 4, ""},
                          {4, "d", "NOUN", 2, ""},
                          {5, ".", "PUNCT", 2, ""}});
  const auto t = sentence_distances(s);
  EXPECT_EQ(t.edges, 3u);
  EXPECT_DOUBLE_EQ(t.distance_sum, 1 + 1 + 2);
  EXPECT_DOUBLE_EQ(*sentence_mdd(s), 4.0 / 3.0);
  EXPECT_DOUBLE_EQ(*sentence_mdd(s, {false, true}), (4.0 + 3.0) / 4.0);
  EXPECT_DOUBLE_EQ(*sentence_mdd(s, {true, false}), (4.0 + 2.0) / 4.0);
  EXPECT_FALSE(sentence_mdd(ParsedSentence({{1, "x", "X", 0, ""}})).has_value());
}

TEST(Mdd, MicroVersusMacro) {
  const auto docs = parse("# doc_id = d\n" + row(1, "a", "X", 0) + row(2, "b", "X", 1) + "\n" + row(1, "a", "X", 0) +
                          row(2, "b", "X", 1) + row(3, "c", "X", 1) + row(4, "d", "X", 1) + "\n");
  // sentence 1: {1}; sentence 2: {1, 2, 3}
  EXPECT_DOUBLE_EQ(corpus_mdd(docs).corpus_mdd, 7.0 / 4.0);
  EXPECT_DOUBLE_EQ(corpus_mdd(docs, {}, MddAggregation::kMacro).corpus_mdd, (1.0 + 2.0) / 2.0);
  EXPECT_THROW(corpus_mdd(parse(row(1, "a", "X", 0))), ValidationError);
}

TEST(Mdd, ChainPropertyAndBounds) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 200; ++t) {
    const int n = 2 + static_cast<int>(rng() % 20);
    std::vector<DependencyToken> chain, random_tree;
    for (int i = 1; i <= n; ++i) chain.push_back({i, "w", "X", i == 1 ? 0 : i - 1, ""});
    EXPECT_DOUBLE_EQ(*sentence_mdd(ParsedSentence(chain)), 1.0);
    const int root = 1 + static_cast<int>(rng() % n);
    for (int i = 1; i <= n; ++i) {
      int head = i == root ? 0 : 1 + static_cast<int>(rng() % n);
      if (head == i) head = root;
      random_tree.push_back({i, "w", "X", head, ""});
    }
    const auto mdd = sentence_mdd(ParsedSentence(random_tree));
    ASSERT_TRUE(mdd.has_value());
    EXPECT_GE(*mdd, 1.0);
    EXPECT_LE(*mdd, n - 1.0);
  }
}

TEST(Mdd, FixtureReport) {
  const auto docs = parse_conllu_file(testutil::fixture("mini_hde_en.conllu"));
  ASSERT_EQ(docs.size(), 5u);
  const auto r = corpus_mdd(docs);
  EXPECT_EQ(r.per_document.size(), 5u);
  const auto j = mdd_report("mini", r, {}, MddAggregation::kMicro);
  EXPECT_EQ(j["mini"]["aggregation"], "micro");
  EXPECT_EQ(j["mini"]["edge_count"], r.edge_count);
}
