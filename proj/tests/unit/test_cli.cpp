#include <gtest/gtest.h>

#include <cstdlib>
#include <memory>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "clcts/corpus.hpp"
#include "clcts/llm.hpp"
#include "clcts/transport.hpp"
#include "test_util.hpp"

using nlohmann::json;
using testutil::fixture;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "clcts");
  std::ostringstream out, err;
  const int code = clcts::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> corpus_args() { return {"--corpus", fixture("mini_hde_en.jsonl"), "--direction", "hDe-En"}; }

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

json read_json(const std::string& path) { return json::parse(testutil::slurp(path)); }

class EnglishMock : public clcts::ChatTransport {
 public:
  clcts::ChatResponse complete(const clcts::ChatRequest&) override {
    return {"The young man travels to the city and is welcomed by his uncle with great joy.", "{}"};
  }
};

}  // namespace

TEST(Cli, HelpAndVersion) {
  EXPECT_EQ(run({"--help"}).code, 0);
  const auto v = run({"--version"});
  EXPECT_EQ(v.code, 0);
  EXPECT_FALSE(v.out.empty());
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"stats"}).code, 1);
}

TEST(Cli, StatsJsonAndVerify) {
  testutil::TempDir dir;
  const auto r = run(with({"--out", dir.path().string(), "stats"}, corpus_args()));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = read_json(dir.file("stats.json"));
  EXPECT_TRUE(report.contains("manifest"));
  const auto manifest = read_json(dir.file("manifest.json"));
  EXPECT_EQ(manifest["subcommand"], "stats");
  EXPECT_EQ(manifest["outputs"].count("stats.json"), 1u);

  auto v = run({"verify", "--manifest", dir.file("manifest.json")});
  EXPECT_EQ(v.code, 0) << v.out;
  EXPECT_NE(v.out.find("OK"), std::string::npos);
  dir.write("stats.json", "{}");
  v = run({"verify", "--manifest", dir.file("manifest.json")});
  EXPECT_EQ(v.code, 1);
  EXPECT_NE(v.out.find("MISMATCH"), std::string::npos);
}

TEST(Cli, StatsCsvIsDeterministic) {
  ::setenv("SOURCE_DATE_EPOCH", "0", 1);
  testutil::TempDir a, b;
  ASSERT_EQ(run(with({"--out", a.path().string(), "--format", "csv", "stats"}, corpus_args())).code, 0);
  ASSERT_EQ(run(with({"--out", b.path().string(), "--format", "csv", "--jobs", "3", "stats"}, corpus_args())).code, 0);
  ::unsetenv("SOURCE_DATE_EPOCH");
  EXPECT_EQ(testutil::slurp(a.file("stats.csv")), testutil::slurp(b.file("stats.csv")));
  EXPECT_FALSE(testutil::slurp(a.file("stats.csv")).empty());
}

TEST(Cli, MalformedInputExitsOne) {
  testutil::TempDir dir;
  const auto bad = dir.write("bad.jsonl", "{\"id\": \"x\"\n");
  const auto r = run({"--out", dir.path().string(), "stats", "--corpus", bad, "--direction", "hDe-En"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("bad.jsonl"), std::string::npos);
}

TEST(Cli, DivergenceWithParses) {
  testutil::TempDir dir;
  const auto r = run(with({"--out", dir.path().string(), "divergence", "--conllu", fixture("mini_hde_en.conllu")},
                          corpus_args()));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(read_json(dir.file("divergence.json")).contains("manifest"));
  testutil::TempDir csv;
  ASSERT_EQ(run(with({"--out", csv.path().string(), "--format", "csv", "divergence", "--jaccard-mode", "pair"},
                     corpus_args()))
                .code,
            0);
  EXPECT_FALSE(testutil::slurp(csv.file("year_histogram.csv")).empty());
}

TEST(Cli, SimilarityScoreCorrelateAgree) {
  testutil::TempDir dir;
  const auto out = dir.path().string();
  auto r = run(with({"--out", out, "similarity", "--embeddings", fixture("mini_hde_en.embeddings.jsonl")},
                    corpus_args()));
  ASSERT_EQ(r.code, 0) << r.err;

  r = run(with({"--out", out, "score", "--candidates", fixture("mini_candidates.jsonl"), "--ingest",
                fixture("mini_scores.csv")},
               corpus_args()));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto scores = clcts::ingest_scores(dir.file("scores.csv"));
  EXPECT_TRUE(scores.find("hde-001", "sys-a", "BERTScore-F1").has_value());
  EXPECT_EQ(scores.find("hde-001", "sys-a", "ROUGE-L-F1").value(), 1.0);

  r = run({"--out", out, "correlate", "--scores", dir.file("scores.csv"), "--annotations",
           fixture("mini_annotations.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  r = run({"--out", out, "agree", "--annotations", fixture("mini_annotations.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(read_json(dir.file("agreement.json")).contains("manifest"));
  EXPECT_EQ(run({"verify", "--manifest", dir.file("manifest.json")}).code, 0);
}

TEST(Cli, AttackGenerationAndScoring) {
  testutil::TempDir dir;
  const auto out = dir.path().string();
  auto r = run(with({"--out", out, "--seed", "7", "attack-gen", "omission", "--fraction", "0.5", "--docs",
                     "hde-001,hde-002"},
                    corpus_args()));
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream lines(testutil::slurp(dir.file("attack_cases.jsonl")));
  std::vector<std::string> ids;
  for (std::string line; std::getline(lines, line);) ids.push_back(json::parse(line)["case_id"]);
  ASSERT_EQ(ids.size(), 2u);

  std::string judgments = "case_id,task,temperature,annotator_id,success\n";
  for (const auto& id : ids) {
    judgments += id + ",CTS,0,a1,1\n";
    judgments += id + ",CTS,0,a2,1\n";
  }
  dir.write("judgments.csv", judgments);
  r = run({"--out", out, "attack-score", "--cases", dir.file("attack_cases.jsonl"), "--judgments",
           dir.file("judgments.csv")});
  EXPECT_EQ(r.code, 0) << r.err;

  r = run(with({"--out", out, "attack-gen", "swap", "--map", "Nobody=Somebody", "--docs", "hde-001"},
               corpus_args()));
  EXPECT_EQ(r.code, 0) << r.err;
}

TEST(Cli, DecayFromSummaries) {
  testutil::TempDir dir;
  std::string lines;
  for (const char* doc : {"a", "b"}) {
    lines += json{{"doc_id", doc}, {"fraction", 0.0}, {"summary", "one two three four"}}.dump() + "\n";
    lines += json{{"doc_id", doc}, {"fraction", 0.5}, {"summary", "one two five six"}}.dump() + "\n";
    lines += json{{"doc_id", doc}, {"fraction", 1.0}, {"summary", "seven"}}.dump() + "\n";
  }
  dir.write("decay.jsonl", lines);
  const auto r = run({"--out", dir.path().string(), "decay", "--summaries", dir.file("decay.jsonl"), "--lang", "en"});
  ASSERT_EQ(r.code, 0) << r.err;
}

TEST(Cli, RegressAssemblesFeatures) {
  testutil::TempDir dir;
  const auto r = run(with({"--out", dir.path().string(), "regress", "--embeddings",
                           fixture("mini_hde_en.embeddings.jsonl"), "--conllu", fixture("mini_hde_en.conllu"),
                           "--scores", fixture("mini_scores.csv")},
                          corpus_args()));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = read_json(dir.file("regression.json"));
  EXPECT_EQ(report["n"], 15);
  EXPECT_EQ(report["table"]["Model:sys-a"], "base");
  EXPECT_TRUE(report["vif"].contains("MDD"));

  // The assembled feature table feeds straight back in.
  testutil::TempDir again;
  const auto r2 = run({"--out", again.path().string(), "regress", "--features", dir.file("features.csv"),
                       "--direction", "hDe-En"});
  ASSERT_EQ(r2.code, 0) << r2.err;
  EXPECT_EQ(read_json(again.file("regression.json"))["table"], report["table"]);

  const auto bad = run({"--out", again.path().string(), "regress", "--features", dir.file("features.csv"),
                        "--direction", "hDe-En", "--base-year", "-1800"});
  EXPECT_EQ(bad.code, 1);
}

TEST(Cli, MatchTitles) {
  testutil::TempDir dir;
  dir.write("docs.jsonl", json{{"title", "Die Straße"}, {"lang", "de"}}.dump() + "\n" +
                              json{{"title", "Nothing Alike"}, {"lang", "en"}}.dump() + "\n");
  dir.write("wiki.jsonl", json{{"title", "Die Strasse"}, {"summary", "s"}}.dump() + "\n");
  const auto r = run({"--out", dir.path().string(), "match", "--documents", dir.file("docs.jsonl"), "--wiki",
                      dir.file("wiki.jsonl")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto m = read_json(dir.file("matches.json"));
  ASSERT_EQ(m["matches"].size(), 1u);
  EXPECT_TRUE(m["matches"][0]["eszett_fallback"].get<bool>());
}

TEST(Cli, SummarizeTransportFailuresExitTwo) {
  testutil::TempDir dir;
  ::unsetenv("CLCTS_TEST_MISSING_KEY");
  auto r = run(with({"--out", dir.path().string(), "summarize", "--api-key-env", "CLCTS_TEST_MISSING_KEY"},
                    corpus_args()));
  EXPECT_EQ(r.code, 2) << r.err;
  // An empty fixture directory lacks the requested exchange: a transport failure.
  std::filesystem::create_directories(dir.file("empty-fixtures"));
  r = run(with({"--out", dir.path().string(), "summarize", "--replay", dir.file("empty-fixtures")}, corpus_args()));
  EXPECT_EQ(r.code, 2) << r.err;
  // A replay directory that does not exist is a usage error.
  r = run(with({"--out", dir.path().string(), "summarize", "--replay", dir.file("nowhere")}, corpus_args()));
  EXPECT_EQ(r.code, 1) << r.err;
}

TEST(Cli, SummarizeReplayIsReproducible) {
  testutil::TempDir fixtures;
  {
    clcts::RecordingTransport rec(std::make_shared<EnglishMock>(), fixtures.path().string());
    const auto corpus = clcts::load_corpus(fixture("mini_hde_en.jsonl"), clcts::Direction::kHDeEn);
    for (const auto& p : corpus.pairs())
      clcts::summarize_with_retry(p, clcts::PromptKind::kE2e, clcts::Direction::kHDeEn, rec);
  }
  ::setenv("SOURCE_DATE_EPOCH", "0", 1);
  testutil::TempDir a, b;
  auto r = run(with({"--out", a.path().string(), "summarize", "--replay", fixtures.path().string()}, corpus_args()));
  ASSERT_EQ(r.code, 0) << r.err;
  r = run(with({"--out", b.path().string(), "--jobs", "4", "summarize", "--replay", fixtures.path().string()},
               corpus_args()));
  ASSERT_EQ(r.code, 0) << r.err;
  ::unsetenv("SOURCE_DATE_EPOCH");
  EXPECT_EQ(testutil::slurp(a.file("summaries.jsonl")), testutil::slurp(b.file("summaries.jsonl")));
  EXPECT_EQ(read_json(a.file("invalid_outputs.json"))["invalid_outputs"]["chatgpt-e2e"]["cell"], "0/5");

  r = run(with({"--out", a.path().string(), "judge", "--candidates", a.file("candidates.jsonl"), "--replay",
                fixtures.path().string()},
               corpus_args()));
  EXPECT_EQ(r.code, 2);
}
