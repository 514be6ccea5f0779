#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace clcts {

struct NormalizationOptions {
  /// Also rewrite "ß" as "ss". The matcher enables this only on a second
  /// pass for titles that did not match with "ß" kept.
  bool fold_eszett = false;
};

/// Title normalization driven by a versioned substitution table.
///
/// Pipeline, in order: case-fold; strip diacritics (ß and long s handled
/// separately); delete apostrophes and replace other punctuation by spaces;
/// per word, apply the language's substring substitutions and closed-list
/// "ie" -> "i" rewrites until nothing changes; collapse whitespace. The
/// fixpoint makes normalization idempotent.
class TitleNormalizer {
 public:
  struct LanguageRules {
    std::vector<std::pair<std::string, std::string>> substitutions;
    std::vector<std::string> ie_to_i_words;
    bool eszett_fallback = false;
  };

  /// Parses a table in the format of core/data/title_normalization.v1.json.
  static TitleNormalizer from_json(std::string_view text);
  /// The table shipped with the library.
  static const TitleNormalizer& builtin();

  const std::string& version() const { return version_; }
  bool eszett_fallback(std::string_view lang) const;

  /// Throws ValidationError("empty title") for an empty title. Unknown
  /// languages get only the language-independent steps.
  std::string normalize(std::string_view title, std::string_view lang,
                        NormalizationOptions options = {}) const;

 private:
  std::string version_;
  std::map<std::string, LanguageRules, std::less<>> rules_;
};

/// normalize_title with the built-in table.
std::string normalize_title(std::string_view title, std::string_view lang,
                            NormalizationOptions options = {});

struct TitledDocument {
  std::string title;
  std::string lang;
  std::map<std::string, std::string> metadata;
};

struct WikiEntry {
  std::string title;
  std::string summary;
};

struct TitleMatch {
  std::size_t document = 0;  // index into the documents input
  std::size_t wiki = 0;      // index into the wiki input
  bool exact = false;        // un-normalized titles are equal
  bool eszett_fallback = false;
};

/// Two or more wiki entries sharing a normalized title.
struct AmbiguousTitle {
  std::string lang;
  std::string key;
  std::vector<std::size_t> wiki;
};

struct MatchReport {
  std::vector<TitleMatch> matches;  // sorted by document index
  std::vector<std::size_t> unmatched_documents;
  std::vector<std::size_t> unmatched_wiki;
  std::vector<AmbiguousTitle> ambiguities;
};

/// One-to-one matching on equal normalized titles (no fuzzy matching).
/// Exact title matches are assigned first, then normalized matches in
/// document order, each taking the first-seen free wiki entry; documents
/// still unmatched get a second pass with "ß" folded to "ss" where the
/// language table enables it. Throws ValidationError if either input is
/// empty. Invariant: matches + unmatched_documents = documents.
MatchReport match_summaries(std::span<const TitledDocument> documents,
                            std::span<const WikiEntry> wiki_entries,
                            const TitleNormalizer& normalizer = TitleNormalizer::builtin());

}  // namespace clcts
