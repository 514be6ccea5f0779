#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "clcts/error.hpp"
#include "clcts/metrics.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace clcts;

namespace {

std::vector<std::string> random_tokens(std::mt19937_64& rng, std::size_t max_len, int vocab) {
  std::vector<std::string> out(rng() % (max_len + 1));
  for (auto& t : out) t = std::string(1, static_cast<char>('a' + rng() % vocab));
  return out;
}

std::vector<std::string> words(const std::string& s) { return tokenize(s, "en"); }

}  // namespace

TEST(Rouge, HandExamples) {
  const auto r1 = rouge1(words("the cat the cat"), words("the cat sat"));
  EXPECT_DOUBLE_EQ(r1.precision, 0.5);
  EXPECT_DOUBLE_EQ(r1.recall, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r1.f1, 2 * 0.5 * (2.0 / 3.0) / (0.5 + 2.0 / 3.0));
  EXPECT_EQ(lcs_length(words("a b c d e"), words("b d f e")), 3u);
  const auto rl = rougeL(words("police killed the gunman"), words("police kill the gunman"));
  EXPECT_DOUBLE_EQ(rl.f1, 0.75);
}

TEST(Rouge, EmptyInputs) {
  EXPECT_THROW(rouge1(words("a"), {}), ValidationError);
  EXPECT_THROW(rougeL(words("a"), {}), ValidationError);
  const auto z = rougeL({}, words("a b"));
  EXPECT_EQ(z.precision, 0.0);
  EXPECT_EQ(z.f1, 0.0);
  EXPECT_EQ(f1_score(0, 0), 0.0);
}

TEST(Rouge, MatchesOracles) {
  std::mt19937_64 rng(1234);
  for (int t = 0; t < 1000; ++t) {
    const auto a = random_tokens(rng, 8, 4);
    auto b = random_tokens(rng, 8, 4);
    if (b.empty()) b.push_back("a");
    EXPECT_EQ(lcs_length(a, b), oracle::lcs_bruteforce(a, b));
    const auto r1 = rouge1(a, b);
    const auto hits = static_cast<double>(oracle::clipped_overlap(a, b));
    EXPECT_EQ(r1.recall, hits / static_cast<double>(b.size()));
    EXPECT_EQ(r1.precision, a.empty() ? 0.0 : hits / static_cast<double>(a.size()));
  }
}

TEST(Rouge, Properties) {
  std::mt19937_64 rng(77);
  for (int t = 0; t < 500; ++t) {
    auto a = random_tokens(rng, 12, 6);
    auto b = random_tokens(rng, 12, 6);
    if (a.empty() || b.empty()) continue;
    EXPECT_EQ(lcs_length(a, b), lcs_length(b, a));
    EXPECT_LE(lcs_length(a, b), oracle::clipped_overlap(a, b));
    EXPECT_EQ(rougeL(a, a).f1, 1.0);
    const auto ab = rougeL(a, b), ba = rougeL(b, a);
    EXPECT_EQ(ab.precision, ba.recall);
    EXPECT_DOUBLE_EQ(ab.f1, ba.f1);
  }
}

TEST(Menli, FormulaAndBounds) {
  EXPECT_DOUBLE_EQ(menli_combine(0.2, 0.9, 0.8), 0.8 * 0.2 + 0.2 * 0.9);
  EXPECT_EQ(menli_combine(0.2, 0.9, 1.0), 0.2);
  EXPECT_EQ(menli_combine(0.2, 0.9, 0.0), 0.9);
  EXPECT_THROW(menli_combine(0.2, 0.9, 1.1), ValidationError);
  EXPECT_THROW(menli_combine(std::nan(""), 0.9, 0.5), ValidationError);
}

TEST(Candidates, DuplicateCitesFirstLine) {
  std::istringstream in(R"({"doc_id":"a","system_id":"s","summary":"x"}
{"doc_id":"b","system_id":"s","summary":"y"}
{"doc_id":"a","system_id":"s","summary":"z"})");
  try {
    parse_candidates(in, "c.jsonl");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("line 1"), std::string::npos) << e.what();
  }
}

TEST(MergeScores, IdenticalSkippedConflictThrows) {
  MetricScoreTable a, b, c;
  a.insert({"d", "s", "m", 0.5, Provenance::kIngested, ""});
  b.insert({"d", "s", "m", 0.5, Provenance::kIngested, ""});
  c.insert({"d", "s", "m", 0.6, Provenance::kIngested, ""});
  merge_scores(a, b);
  EXPECT_EQ(a.size(), 1u);
  EXPECT_THROW(merge_scores(a, c), ValidationError);
}

TEST(ScoreSystems, FixturePipeline) {
  const auto corpus = load_corpus(testutil::fixture("mini_hde_en.jsonl"), Direction::kHDeEn);
  const auto candidates = load_candidates(testutil::fixture("mini_candidates.jsonl"));
  const auto ingested = ingest_scores(testutil::fixture("mini_scores.csv"));
  const auto table = score_systems(corpus, candidates, ingested);
  // 15 candidates x (6 ROUGE + 2 ingested + 4 MENLI)
  EXPECT_EQ(table.size(), 15u * 12u);
  EXPECT_EQ(*table.find("hde-001", "sys-a", "ROUGE-1-F1"), 1.0);
  const auto* row = table.find_row({"hde-002", "sys-b", "MENLI-W.3"});
  ASSERT_NE(row, nullptr);
  EXPECT_EQ(row->provenance, Provenance::kDerived);
  EXPECT_EQ(row->value, menli_combine(*ingested.find("hde-002", "sys-b", "NLI-D"),
                                      *ingested.find("hde-002", "sys-b", "BERTScore-F1"), 0.3));
  EXPECT_EQ(table.find_row({"hde-001", "sys-a", "ROUGE-L-F1"})->config, rouge_config({}));

  // Re-ingesting our own output keeps consistent MENLI rows.
  EXPECT_EQ(score_systems(corpus, candidates, table).size(), table.size());
  const auto parallel = score_systems(corpus, candidates, ingested, {}, 4);
  EXPECT_EQ(parallel.rows().size(), table.rows().size());
}

TEST(ScoreSystems, InconsistentMenliRejected) {
  const auto corpus = load_corpus(testutil::fixture("mini_hde_en.jsonl"), Direction::kHDeEn);
  auto ingested = ingest_scores(testutil::fixture("mini_scores.csv"));
  ingested.insert({"hde-001", "sys-a", "MENLI-W.8", 5.0, Provenance::kIngested, ""});
  EXPECT_THROW(score_systems(corpus, {}, ingested), ValidationError);
}

TEST(ScoreSystems, UnknownDocumentRejected) {
  const auto corpus = load_corpus(testutil::fixture("mini_hde_en.jsonl"), Direction::kHDeEn);
  CandidateMap c{{{"missing", "s"}, "text"}};
  EXPECT_THROW(score_systems(corpus, c, {}), ValidationError);
}
