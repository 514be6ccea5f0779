#include <gtest/gtest.h>

#include <atomic>
#include <sstream>

#include "clcts/data.hpp"
#include "clcts/error.hpp"
#include "clcts/llm.hpp"
#include "test_util.hpp"

using namespace clcts;

namespace {

const std::string kEnglish = "The young man went to the city and he was welcomed by his uncle with great joy.";
const std::string kGerman = "Der junge Mann ging in die Stadt und er wurde von seinem Onkel mit großer Freude empfangen.";

// Replies from a script, cycling on the last entry, and counts calls.
class ScriptedTransport : public ChatTransport {
 public:
  explicit ScriptedTransport(std::vector<std::string> script) : script_(std::move(script)) {}
  ChatResponse complete(const ChatRequest& request) override {
    last_prompt = request.messages.back().content;
    const auto n = static_cast<std::size_t>(calls++);
    return {script_[std::min(n, script_.size() - 1)], "{}"};
  }
  std::atomic<int> calls{0};
  std::string last_prompt;

 private:
  std::vector<std::string> script_;
};

SummaryPair pair_de(const std::string& document) {
  return {"d1", "Die Reise", "J. Müller", 1820, "de-hist", "en", document, "A trip.", false, "x"};
}

}  // namespace

TEST(Prompts, RenderEveryTemplate) {
  PromptFields f{"TXT", "TTL", "AUT"};
  EXPECT_EQ(render_prompt(PromptKind::kE2e, Direction::kHDeEn, f),
            "Please summarize the following text in English : TXT.");
  EXPECT_EQ(render_prompt(PromptKind::kE2eTitle, Direction::kHEnDe, f),
            "Bitte gebe mir die Zusammenfassung der Geschichte TTL von AUT.");
  EXPECT_EQ(render_prompt(PromptKind::kPipeline, Direction::kHDeEn, f),
            "Please first translate the following text into English and summarize the translated text: TXT");
  EXPECT_EQ(prompt_templates_version(), "prompts-v1");
}

TEST(Prompts, SinglePassSubstitution) {
  PromptFields f{"contains [Title] literally", "T", "A"};
  EXPECT_EQ(render_prompt(PromptKind::kE2e, Direction::kHDeEn, f),
            "Please summarize the following text in English : contains [Title] literally.");
  EXPECT_THROW(render_prompt(PromptKind::kE2e, Direction::kHDeEn, PromptFields{}), ValidationError);
  EXPECT_THROW(prompt_template(PromptKind::kE2e, Direction::kHDeDe), ValidationError);
}

TEST(Truncation, ExactBudgets) {
  EXPECT_EQ(default_word_budget("de"), 2048u);
  EXPECT_EQ(default_word_budget("en-hist"), 3000u);
  std::string text;
  for (int i = 0; i < 2100; ++i) text += "w" + std::to_string(i) + (i % 7 ? " " : "\n");
  const auto t = truncate_for_model(text, 2048);
  EXPECT_TRUE(t.truncated);
  EXPECT_EQ(t.words, 2048u);
  EXPECT_EQ(text.compare(0, t.text.size(), t.text), 0);
  EXPECT_EQ(t.text.substr(t.text.size() - 5), "w2047");
  const auto whole = truncate_for_model("a b  c", 3);
  EXPECT_FALSE(whole.truncated);
  EXPECT_EQ(whole.text, "a b  c");
}

TEST(LanguageId, BasicAndUnknown) {
  EXPECT_EQ(detect_language(kEnglish).lang, "en");
  EXPECT_EQ(detect_language(kGerman).lang, "de");
  EXPECT_EQ(detect_language("Hallo Welt").lang, "unknown");
  EXPECT_EQ(detect_language("xyzzy plugh frobozz quux zork").lang, "unknown");
  EXPECT_GT(detect_language(kEnglish).confidence, 0.0);
}

TEST(LanguageId, ShippedValidationSet) {
  std::istringstream in{std::string(data::get("langid_validation.v1.tsv"))};
  std::string line;
  std::getline(in, line);
  int total = 0, correct = 0;
  while (std::getline(in, line)) {
    const auto tab = line.find('\t');
    ++total;
    correct += detect_language(line.substr(tab + 1)).lang == line.substr(0, tab);
  }
  EXPECT_EQ(total, 200);
  EXPECT_GE(correct, 190);
}

TEST(Summarize, RetriesWrongLanguageWithinBudget) {
  ScriptedTransport t({kGerman, kGerman, kEnglish});
  const auto r = summarize_with_retry(pair_de("Ein Text."), PromptKind::kE2e, Direction::kHDeEn, t);
  EXPECT_TRUE(r.valid);
  EXPECT_EQ(r.text, kEnglish);
  EXPECT_EQ(r.attempts.size(), 3u);
  EXPECT_EQ(r.system_id, "chatgpt-e2e");
  EXPECT_EQ(t.last_prompt, "Please summarize the following text in English : Ein Text..");
}

TEST(Summarize, NeverExceedsMaxRoundsPlusOne) {
  for (int rounds = 0; rounds <= 4; ++rounds) {
    ScriptedTransport t({kGerman});
    SummarizeOptions o;
    o.max_rounds = rounds;
    const auto r = summarize_with_retry(pair_de("Ein Text."), PromptKind::kPipeline, Direction::kHDeEn, t, o);
    EXPECT_FALSE(r.valid);
    EXPECT_EQ(t.calls.load(), rounds + 1);
    EXPECT_TRUE(r.text.empty());
  }
  ScriptedTransport t({kGerman});
  EXPECT_THROW(summarize_with_retry(pair_de("x"), PromptKind::kE2e, Direction::kHDeDe, t), ValidationError);
}

TEST(Summarize, TitlePromptAndTruncation) {
  ScriptedTransport t({kEnglish});
  summarize_with_retry(pair_de("egal"), PromptKind::kE2eTitle, Direction::kHDeEn, t);
  EXPECT_EQ(t.last_prompt, "Please give me the summary of the story Die Reise written by J. Müller.");
  std::string doc;
  for (int i = 0; i < 3000; ++i) doc += "Wort ";
  const auto r = summarize_with_retry(pair_de(doc), PromptKind::kE2e, Direction::kHDeEn, t);
  EXPECT_EQ(r.truncated_input_words, 2048u);
}

TEST(Retrieve, SortDedupeCap) {
  const auto p = pair_de("Eins ist hier. Zwei ist da. Drei ist dort. Vier ist weg.");
  EXPECT_EQ(join_extracted(p, {3, 0, 3, 1}, 100), "Eins ist hier. Zwei ist da. Vier ist weg.");
  EXPECT_EQ(join_extracted(p, {3, 2, 1}, 2), "Zwei ist da. Drei ist dort.");
  EXPECT_THROW(join_extracted(p, {4}, 100), ValidationError);
  EXPECT_THROW(join_extracted(p, {}, 100), ValidationError);
  ScriptedTransport t({kEnglish});
  const auto r = retrieve_then_summarize(p, {2, 0}, Direction::kHDeEn, t);
  EXPECT_EQ(r.system_id, "memsum-chatgpt");
  EXPECT_EQ(t.last_prompt, "Please summarize the following text in English : Eins ist hier. Drei ist dort..");
}

TEST(Retrieve, CapKeepsFirstHundredInDocumentOrder) {
  std::string doc;
  for (int i = 0; i < 120; ++i) doc += "Satz " + std::to_string(i) + " endet. ";
  const auto p = pair_de(doc);
  std::vector<std::size_t> idx;
  for (std::size_t i = 120; i-- > 0;) idx.push_back(i);
  const auto joined = join_extracted(p, idx, 100);
  EXPECT_EQ(joined.substr(0, 13), "Satz 0 endet.");
  EXPECT_EQ(joined.substr(joined.size() - 14), "Satz 99 endet.");
}

TEST(InvalidOutputs, ReportCells) {
  std::vector<SummaryResult> rs(4);
  for (std::size_t i = 0; i < rs.size(); ++i) {
    rs[i].system_id = i < 3 ? "chatgpt-e2e" : "chatgpt-pipeline";
    rs[i].valid = i != 1;
  }
  const auto j = invalid_output_report(rs);
  EXPECT_EQ(j["chatgpt-e2e"]["cell"], "1/3");
  EXPECT_EQ(j["chatgpt-pipeline"]["cell"], "0/1");
}

TEST(Judge, PromptAndParsing) {
  const auto prompt = render_judge_prompt("SRC", "REF", "CAND");
  EXPECT_NE(prompt.find("SRC"), std::string::npos);
  EXPECT_NE(prompt.find("CAND"), std::string::npos);
  EXPECT_EQ(prompt.find("[Source]"), std::string::npos);
  EXPECT_NE(prompt.substr(0, 2), "# ");

  const auto ok = parse_judge_response("Coherence: 4\nConsistency: 3.5\nFluency: 5\nRelevance: 2");
  EXPECT_TRUE(ok.parse_ok);
  EXPECT_EQ(ok.ratings[1], 3.5);
  EXPECT_FALSE(parse_judge_response("Coherence: 4\nConsistency: 3.5\nFluency: 5").parse_ok);
  EXPECT_FALSE(parse_judge_response("Coherence: 4.2\nConsistency: 3\nFluency: 5\nRelevance: 2").parse_ok);
  EXPECT_FALSE(parse_judge_response("").parse_ok);

  ScriptedTransport t({"coherence: 4, consistency: 4, fluency: 4.5, relevance: 3"});
  const auto r = judge_summary("d", "s", "SRC", "REF", "CAND", t);
  ASSERT_TRUE(r.parse_ok);
  const auto recs = judge_annotations({r, parse_judge_response("nonsense")}, "judge-model");
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0].rater_kind, RaterKind::kLlm);
  EXPECT_EQ(recs[0].rater_id, "judge-model");
}
