#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "clcts/corpus.hpp"
#include "clcts/transport.hpp"

namespace clcts {

enum class PromptKind { kE2e, kE2eTitle, kPipeline, kJudge };
std::string_view to_string(PromptKind k);
PromptKind parse_prompt_kind(std::string_view text);

struct PromptFields {
  std::optional<std::string> text;
  std::optional<std::string> title;
  std::optional<std::string> author;
};

/// Version id of the shipped template table.
std::string prompt_templates_version();

/// Raw template for a summarization prompt kind and cross-lingual direction.
std::string_view prompt_template(PromptKind kind, Direction direction);

/// Fills [Text], [Title]/[Titel] and [Author]/[Autor]. A placeholder
/// without a value is an error.
std::string render_prompt(PromptKind kind, Direction direction, const PromptFields& fields);

/// Default word budgets: 2048 for German, 3000 for English input.
std::size_t default_word_budget(std::string_view lang);

struct Truncation {
  std::string text;
  std::size_t words = 0;  // words kept
  bool truncated = false;
};

/// Keeps the first `budget` whitespace-delimited words; the result is a
/// byte prefix of the input ending at the last kept word.
Truncation truncate_for_model(std::string_view text, std::size_t budget);

struct LanguageGuess {
  std::string lang;  // "en", "de" or "unknown"
  double confidence = 0;
};

/// Share of tokens found in each language's 100 most frequent function
/// words; the winner's margin over the runner-up is the confidence. Fewer
/// than 5 words, no function words, or a tie give "unknown".
LanguageGuess detect_language(std::string_view text);
std::string stopword_lists_version();

struct Attempt {
  std::string raw;
  std::string detected;
  double confidence = 0;
  bool valid = false;
};

struct SummaryResult {
  std::string doc_id;
  std::string system_id;
  std::string text;  // last valid output; empty when invalid
  std::vector<Attempt> attempts;
  double temperature = 0.7;
  std::size_t truncated_input_words = 0;
  bool valid = false;

  nlohmann::json to_json() const;
};

struct SummarizeOptions {
  std::string model = "gpt-3.5-turbo";
  std::string system_id;  // default: "chatgpt-<kind>"
  double temperature = 0.7;
  int max_rounds = 2;                  // re-queries after a wrong-language output
  std::optional<std::size_t> budget;   // default from the source language
};

/// Renders the prompt, truncates the document, queries the transport and
/// re-queries with the same prompt while the output is not in the target
/// language, at most max_rounds times.
SummaryResult summarize_with_retry(const SummaryPair& pair, PromptKind kind, Direction direction,
                                   ChatTransport& transport, const SummarizeOptions& options = {});

/// Sorts and de-duplicates the extracted sentence indices, keeps the first
/// `cap` in document order, joins those sentences and summarizes them.
SummaryResult retrieve_then_summarize(const SummaryPair& pair, std::vector<std::size_t> indices,
                                      Direction direction, ChatTransport& transport,
                                      const SummarizeOptions& options = {}, std::size_t cap = 100,
                                      PromptKind kind = PromptKind::kE2e);

/// Selected sentences in document order, joined by single spaces.
std::string join_extracted(const SummaryPair& pair, std::vector<std::size_t> indices, std::size_t cap);

/// system -> "invalid/total", e.g. "57/328".
nlohmann::json invalid_output_report(const std::vector<SummaryResult>& results);

struct JudgeResult {
  std::string doc_id;
  std::string system_id;
  std::array<double, 4> ratings{};  // indexed by Dimension
  std::string raw;
  bool parse_ok = false;
  std::string problem;  // why parsing failed

  nlohmann::json to_json() const;
};

std::string judge_prompt_version();
std::string render_judge_prompt(std::string_view source, std::string_view reference, std::string_view candidate);

/// Parses "coherence: 4, consistency: 3.5, ..." style responses. Missing
/// dimensions or ratings off the 0.5 grid leave parse_ok false.
JudgeResult parse_judge_response(const std::string& raw);

struct JudgeOptions {
  std::string model = "gpt-4-1106-preview";
  double temperature = 0.0;
};

JudgeResult judge_summary(const std::string& doc_id, const std::string& system_id, std::string_view source,
                          std::string_view reference, std::string_view candidate, ChatTransport& transport,
                          const JudgeOptions& options = {});

/// Parsed judgments as LLM annotation records with rater_id = model.
std::vector<AnnotationRecord> judge_annotations(const std::vector<JudgeResult>& results, const std::string& model);

}  // namespace clcts
