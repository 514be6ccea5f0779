#include "clcts/title.hpp"

#include <algorithm>
#include <optional>

#include <nlohmann/json.hpp>

#include "clcts/corpus.hpp"
#include "clcts/data.hpp"
#include "clcts/error.hpp"
#include "clcts/unicode.hpp"

namespace clcts {
namespace {

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::string cur;
  for (char c : text) {
    if (c == ' ') {
      if (!cur.empty()) words.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  if (from.empty()) return;
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
}

}  // namespace

TitleNormalizer TitleNormalizer::from_json(std::string_view text) {
  TitleNormalizer n;
  try {
    const auto j = nlohmann::json::parse(text);
    n.version_ = j.at("version").get<std::string>();
    for (const auto& [lang, rules_json] : j.at("languages").items()) {
      LanguageRules rules;
      for (const auto& s : rules_json.at("substitutions")) {
        auto from = s.at("from").get<std::string>();
        if (from.empty()) throw ValidationError("empty substitution source for '" + lang + "'");
        rules.substitutions.emplace_back(std::move(from), s.at("to").get<std::string>());
      }
      rules.ie_to_i_words = rules_json.at("ie_to_i_words").get<std::vector<std::string>>();
      rules.eszett_fallback = rules_json.at("eszett_fallback").get<bool>();
      n.rules_.emplace(lang, std::move(rules));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed title normalization table: ") + e.what());
  }
  return n;
}

const TitleNormalizer& TitleNormalizer::builtin() {
  static const TitleNormalizer instance = from_json(data::get("title_normalization.v1.json"));
  return instance;
}

bool TitleNormalizer::eszett_fallback(std::string_view lang) const {
  auto it = rules_.find(base_language(lang));
  return it != rules_.end() && it->second.eszett_fallback;
}

std::string TitleNormalizer::normalize(std::string_view title, std::string_view lang,
                                       NormalizationOptions options) const {
  if (title.empty()) throw ValidationError("empty title");

  std::string cleaned;
  for (auto cp : unicode::decode(unicode::strip_diacritics(unicode::to_lower(title)))) {
    if (unicode::is_apostrophe(cp)) continue;
    if (cp == 0xDF) {
      cleaned += options.fold_eszett ? "ss" : unicode::encode(cp);
    } else if (unicode::is_letter(cp) || unicode::is_digit(cp)) {
      cleaned += unicode::encode(cp);
    } else {
      cleaned.push_back(' ');
    }
  }

  const auto it = rules_.find(base_language(lang));
  const LanguageRules* rules = it == rules_.end() ? nullptr : &it->second;

  std::string out;
  for (auto& word : split_words(cleaned)) {
    if (rules != nullptr) {
      for (bool changed = true; changed;) {
        const std::string before = word;
        for (const auto& [from, to] : rules->substitutions) replace_all(word, from, to);
        if (std::find(rules->ie_to_i_words.begin(), rules->ie_to_i_words.end(), word) !=
            rules->ie_to_i_words.end())
          replace_all(word, "ie", "i");
        changed = word != before;
      }
    }
    if (word.empty()) continue;
    if (!out.empty()) out.push_back(' ');
    out += word;
  }
  return out;
}

std::string normalize_title(std::string_view title, std::string_view lang,
                            NormalizationOptions options) {
  return TitleNormalizer::builtin().normalize(title, lang, options);
}

MatchReport match_summaries(std::span<const TitledDocument> documents,
                            std::span<const WikiEntry> wiki_entries,
                            const TitleNormalizer& normalizer) {
  if (documents.empty()) throw ValidationError("match_summaries: no documents");
  if (wiki_entries.empty()) throw ValidationError("match_summaries: no wiki entries");

  // Wiki keys are computed in the language of the document being matched.
  struct Keys {
    std::vector<std::optional<std::string>> plain;
    std::vector<std::optional<std::string>> folded;
  };
  std::map<std::string, Keys> keys_by_lang;
  auto normalize_or_none = [&](const std::string& t, const std::string& lang,
                               NormalizationOptions opt) -> std::optional<std::string> {
    if (t.empty()) return std::nullopt;
    auto k = normalizer.normalize(t, lang, opt);
    if (k.empty()) return std::nullopt;
    return k;
  };
  auto wiki_keys = [&](const std::string& lang) -> const Keys& {
    auto [it, inserted] = keys_by_lang.try_emplace(base_language(lang));
    if (inserted) {
      for (const auto& w : wiki_entries) {
        it->second.plain.push_back(normalize_or_none(w.title, lang, {}));
        it->second.folded.push_back(normalize_or_none(w.title, lang, {.fold_eszett = true}));
      }
    }
    return it->second;
  };

  MatchReport report;
  std::vector<bool> doc_taken(documents.size(), false);
  std::vector<bool> wiki_taken(wiki_entries.size(), false);

  // Pass 1: identical titles.
  for (std::size_t d = 0; d < documents.size(); ++d) {
    for (std::size_t w = 0; w < wiki_entries.size(); ++w) {
      if (!wiki_taken[w] && !documents[d].title.empty() &&
          documents[d].title == wiki_entries[w].title) {
        report.matches.push_back({d, w, true, false});
        doc_taken[d] = wiki_taken[w] = true;
        break;
      }
    }
  }

  // Pass 2 (ß kept) and pass 3 (ß folded, where enabled).
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t d = 0; d < documents.size(); ++d) {
      if (doc_taken[d]) continue;
      const auto& doc = documents[d];
      if (pass == 1 && !normalizer.eszett_fallback(doc.lang)) continue;
      const auto key = normalize_or_none(doc.title, doc.lang, {.fold_eszett = pass == 1});
      if (!key) continue;
      const auto& keys = wiki_keys(doc.lang);
      const auto& wk = pass == 0 ? keys.plain : keys.folded;
      for (std::size_t w = 0; w < wiki_entries.size(); ++w) {
        if (!wiki_taken[w] && wk[w] == key) {
          report.matches.push_back({d, w, false, pass == 1});
          doc_taken[d] = wiki_taken[w] = true;
          break;
        }
      }
    }
  }

  // Ambiguity report per language seen among the documents.
  for (const auto& doc : documents) wiki_keys(doc.lang);
  for (const auto& [lang, keys] : keys_by_lang) {
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t w = 0; w < wiki_entries.size(); ++w)
      if (keys.plain[w]) groups[*keys.plain[w]].push_back(w);
    for (auto& [key, idx] : groups)
      if (idx.size() > 1) report.ambiguities.push_back({lang, key, std::move(idx)});
  }

  std::sort(report.matches.begin(), report.matches.end(),
            [](const TitleMatch& a, const TitleMatch& b) { return a.document < b.document; });
  for (std::size_t d = 0; d < documents.size(); ++d)
    if (!doc_taken[d]) report.unmatched_documents.push_back(d);
  for (std::size_t w = 0; w < wiki_entries.size(); ++w)
    if (!wiki_taken[w]) report.unmatched_wiki.push_back(w);
  return report;
}

}  // namespace clcts
