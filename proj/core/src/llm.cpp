#include "clcts/llm.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <set>
#include <unordered_set>

#include "clcts/data.hpp"
#include "clcts/error.hpp"
#include "clcts/textstats.hpp"
#include "clcts/unicode.hpp"

namespace clcts {

std::string_view to_string(PromptKind k) {
  switch (k) {
    case PromptKind::kE2e: return "e2e";
    case PromptKind::kE2eTitle: return "e2e_title";
    case PromptKind::kPipeline: return "pipeline";
    case PromptKind::kJudge: return "judge";
  }
  return "?";
}

PromptKind parse_prompt_kind(std::string_view text) {
  if (text == "e2e") return PromptKind::kE2e;
  if (text == "e2e_title") return PromptKind::kE2eTitle;
  if (text == "pipeline") return PromptKind::kPipeline;
  if (text == "judge") return PromptKind::kJudge;
  throw ValidationError("unknown prompt kind '" + std::string(text) + "' (e2e, e2e_title, pipeline, judge)");
}

namespace {

struct Templates {
  std::string version;
  std::map<std::pair<std::string, std::string>, std::string> by_key;  // (kind, direction)
};

const Templates& templates() {
  static const Templates t = [] {
    Templates out;
    const auto j = nlohmann::json::parse(data::get("prompts.v1.json"));
    out.version = j.at("version").get<std::string>();
    for (const auto& e : j.at("templates"))
      out.by_key[{e.at("kind").get<std::string>(), e.at("direction").get<std::string>()}] =
          e.at("template").get<std::string>();
    return out;
  }();
  return t;
}

struct Stopwords {
  std::string version;
  std::map<std::string, std::unordered_set<std::string>> by_lang;
};

const Stopwords& stopwords() {
  static const Stopwords s = [] {
    Stopwords out;
    const auto j = nlohmann::json::parse(data::get("stopwords.v1.json"));
    out.version = j.at("version").get<std::string>();
    for (const auto& [key, value] : j.items()) {
      if (!value.is_array()) continue;
      for (const auto& w : value) out.by_lang[key].insert(w.get<std::string>());
    }
    return out;
  }();
  return s;
}

// Replaces each known placeholder in one left-to-right pass so substituted
// text is never scanned again.
std::string fill(std::string_view tmpl, const std::map<std::string, std::optional<std::string>>& values) {
  std::string out;
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '[') {
      const auto close = tmpl.find(']', i);
      if (close != std::string_view::npos) {
        const std::string name(tmpl.substr(i, close - i + 1));
        auto it = values.find(name);
        if (it != values.end()) {
          if (!it->second) throw ValidationError("prompt placeholder " + name + " has no value");
          out += *it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(tmpl[i]);
    ++i;
  }
  return out;
}

std::string judge_template_body() {
  std::string_view raw = data::get("judge_prompt.v1.txt");
  if (raw.substr(0, 2) == "# ") raw.remove_prefix(raw.find('\n') + 1);
  return std::string(raw);
}

}  // namespace

std::string prompt_templates_version() { return templates().version; }

std::string_view prompt_template(PromptKind kind, Direction direction) {
  const auto& t = templates().by_key;
  auto it = t.find({std::string(to_string(kind)), std::string(to_string(direction))});
  if (it == t.end())
    throw ValidationError("no " + std::string(to_string(kind)) + " prompt for direction " +
                          std::string(to_string(direction)));
  return it->second;
}

std::string render_prompt(PromptKind kind, Direction direction, const PromptFields& fields) {
  if (kind == PromptKind::kJudge) throw ValidationError("use render_judge_prompt for judge prompts");
  return fill(prompt_template(kind, direction), {{"[Text]", fields.text},
                                                  {"[Title]", fields.title},
                                                  {"[Titel]", fields.title},
                                                  {"[Author]", fields.author},
                                                  {"[Autor]", fields.author}});
}

std::size_t default_word_budget(std::string_view lang) {
  const auto base = base_language(lang);
  if (base == "de") return 2048;
  if (base == "en") return 3000;
  throw ValidationError("no default word budget for language '" + std::string(lang) + "'");
}

Truncation truncate_for_model(std::string_view text, std::size_t budget) {
  if (budget == 0) throw ValidationError("word budget must be positive");
  auto is_ws = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
  Truncation t;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_ws(text[i])) ++i;
    if (i >= text.size()) break;
    if (t.words == budget) {
      t.truncated = true;
      break;
    }
    while (i < text.size() && !is_ws(text[i])) ++i;
    ++t.words;
    t.text.assign(text.substr(0, i));
  }
  if (!t.truncated) t.text.assign(text);
  return t;
}

LanguageGuess detect_language(std::string_view text) {
  TokenizationPolicy policy;
  const auto tokens = tokenize(text, "", policy);
  if (tokens.size() < 5) return {"unknown", 0.0};
  std::vector<std::pair<double, std::string>> ratios;
  for (const auto& [lang, words] : stopwords().by_lang) {
    std::size_t hits = 0;
    for (const auto& t : tokens) hits += words.count(t);
    ratios.emplace_back(static_cast<double>(hits) / static_cast<double>(tokens.size()), lang);
  }
  std::sort(ratios.begin(), ratios.end(), std::greater<>());
  if (ratios.empty() || ratios[0].first == 0) return {"unknown", 0.0};
  const double margin = ratios.size() > 1 ? ratios[0].first - ratios[1].first : ratios[0].first;
  if (margin == 0) return {"unknown", 0.0};
  return {ratios[0].second, margin};
}

std::string stopword_lists_version() { return stopwords().version; }

nlohmann::json SummaryResult::to_json() const {
  nlohmann::json att = nlohmann::json::array();
  for (const auto& a : attempts)
    att.push_back({{"raw", a.raw}, {"detected", a.detected}, {"confidence", a.confidence}, {"valid", a.valid}});
  return {{"doc_id", doc_id},
          {"system_id", system_id},
          {"text", text},
          {"attempts", att},
          {"temperature", temperature},
          {"truncated_input_words", truncated_input_words},
          {"valid", valid}};
}

namespace {

SummaryResult run_summary(const SummaryPair& pair, const std::string& document, PromptKind kind,
                          Direction direction, ChatTransport& transport, const SummarizeOptions& options,
                          const std::string& default_system) {
  if (!is_cross_lingual(direction))
    throw ValidationError("summarization prompts exist for hDe-En and hEn-De only");
  if (options.max_rounds < 0) throw ValidationError("max_rounds must be non-negative");
  SummaryResult r;
  r.doc_id = pair.id;
  r.system_id = options.system_id.empty() ? default_system : options.system_id;
  r.temperature = options.temperature;

  PromptFields fields;
  if (kind == PromptKind::kE2eTitle) {
    fields.title = pair.title;
    fields.author = pair.author;
  } else {
    const auto budget = options.budget.value_or(default_word_budget(source_language(direction)));
    auto t = truncate_for_model(document, budget);
    r.truncated_input_words = t.words;
    fields.text = std::move(t.text);
  }
  ChatRequest request;
  request.model = options.model;
  request.temperature = options.temperature;
  request.messages.push_back({"user", render_prompt(kind, direction, fields)});

  const std::string target(target_language(direction));
  for (int round = 0; round <= options.max_rounds; ++round) {
    auto response = transport.complete(request);
    const auto guess = detect_language(response.content);
    Attempt a{response.content, guess.lang, guess.confidence, guess.lang == target};
    r.attempts.push_back(a);
    if (a.valid) {
      r.text = response.content;
      r.valid = true;
      break;
    }
  }
  return r;
}

}  // namespace

SummaryResult summarize_with_retry(const SummaryPair& pair, PromptKind kind, Direction direction,
                                   ChatTransport& transport, const SummarizeOptions& options) {
  if (kind == PromptKind::kJudge) throw ValidationError("judge prompts do not produce summaries");
  return run_summary(pair, pair.document, kind, direction, transport, options,
                     "chatgpt-" + std::string(to_string(kind)));
}

std::string join_extracted(const SummaryPair& pair, std::vector<std::size_t> indices, std::size_t cap) {
  if (indices.empty()) throw ValidationError("no extracted sentence indices for '" + pair.id + "'");
  if (cap == 0) throw ValidationError("sentence cap must be positive");
  const auto sentences = split_sentences(pair.document, pair.lang_src);
  std::sort(indices.begin(), indices.end());
  indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
  if (indices.back() >= sentences.size())
    throw ValidationError("sentence index " + std::to_string(indices.back()) + " out of range for '" + pair.id +
                          "' (" + std::to_string(sentences.size()) + " sentences)");
  if (indices.size() > cap) indices.resize(cap);
  std::string out;
  for (auto i : indices) {
    if (!out.empty()) out += ' ';
    out += sentences[i];
  }
  return out;
}

SummaryResult retrieve_then_summarize(const SummaryPair& pair, std::vector<std::size_t> indices,
                                      Direction direction, ChatTransport& transport,
                                      const SummarizeOptions& options, std::size_t cap, PromptKind kind) {
  if (kind == PromptKind::kE2eTitle || kind == PromptKind::kJudge)
    throw ValidationError("retrieve-then-summarize needs a text prompt (e2e or pipeline)");
  const auto text = join_extracted(pair, std::move(indices), cap);
  return run_summary(pair, text, kind, direction, transport, options, "memsum-chatgpt");
}

nlohmann::json invalid_output_report(const std::vector<SummaryResult>& results) {
  std::map<std::string, std::pair<std::size_t, std::size_t>> tally;
  for (const auto& r : results) {
    auto& t = tally[r.system_id];
    t.first += !r.valid;
    ++t.second;
  }
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [system, t] : tally)
    out[system] = {{"cell", std::to_string(t.first) + "/" + std::to_string(t.second)},
                   {"invalid", t.first},
                   {"total", t.second}};
  return out;
}

nlohmann::json JudgeResult::to_json() const {
  nlohmann::json ratings_json = nlohmann::json::object();
  for (Dimension d : kAllDimensions)
    ratings_json[std::string(to_string(d))] = parse_ok ? nlohmann::json(ratings[static_cast<std::size_t>(d)])
                                                       : nlohmann::json(nullptr);
  return {{"doc_id", doc_id}, {"system_id", system_id}, {"ratings", ratings_json},
          {"raw", raw},       {"parse_ok", parse_ok},   {"problem", problem}};
}

std::string judge_prompt_version() { return "judge-prompt-v1"; }

std::string render_judge_prompt(std::string_view source, std::string_view reference, std::string_view candidate) {
  return fill(judge_template_body(), {{"[Source]", std::string(source)},
                                      {"[Reference]", std::string(reference)},
                                      {"[Summary]", std::string(candidate)}});
}

JudgeResult parse_judge_response(const std::string& raw) {
  JudgeResult r;
  r.raw = raw;
  if (raw.find_first_not_of(" \t\r\n") == std::string::npos) {
    r.problem = "empty response";
    return r;
  }
  for (Dimension d : kAllDimensions) {
    const std::regex pattern(std::string(to_string(d)) + R"(\W{0,3}\s*[:=]\s*([0-9]+(?:[.,][0-9]+)?))",
                             std::regex::icase);
    std::smatch m;
    if (!std::regex_search(raw, m, pattern)) {
      r.problem = "no " + std::string(to_string(d)) + " rating";
      return r;
    }
    std::string number = m[1].str();
    std::replace(number.begin(), number.end(), ',', '.');
    const double v = std::stod(number);
    if (!is_valid_rating(v)) {
      r.problem = std::string(to_string(d)) + " rating " + number + " is not in {1, 1.5, ..., 5}";
      return r;
    }
    r.ratings[static_cast<std::size_t>(d)] = v;
  }
  r.parse_ok = true;
  return r;
}

JudgeResult judge_summary(const std::string& doc_id, const std::string& system_id, std::string_view source,
                          std::string_view reference, std::string_view candidate, ChatTransport& transport,
                          const JudgeOptions& options) {
  ChatRequest request;
  request.model = options.model;
  request.temperature = options.temperature;
  request.messages.push_back({"user", render_judge_prompt(source, reference, candidate)});
  auto response = transport.complete(request);
  auto r = parse_judge_response(response.content);
  r.doc_id = doc_id;
  r.system_id = system_id;
  return r;
}

std::vector<AnnotationRecord> judge_annotations(const std::vector<JudgeResult>& results, const std::string& model) {
  std::vector<AnnotationRecord> out;
  for (const auto& r : results) {
    if (!r.parse_ok) continue;
    AnnotationRecord a;
    a.doc_id = r.doc_id;
    a.system_id = r.system_id;
    a.rater_id = model;
    a.rater_kind = RaterKind::kLlm;
    a.ratings = r.ratings;
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace clcts
