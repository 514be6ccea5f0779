#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "clcts/corpus.hpp"

namespace clcts {

/// Tokenization settings. The policy id is stamped into every report so
/// numbers from different policies are never mixed silently.
struct TokenizationPolicy {
  std::string rule_set = "uword-v1";
  bool lowercase = true;
  bool strip_punctuation = true;

  /// e.g. "uword-v1+lower+nopunct".
  std::string id() const;
};

/// Splits text into Unicode words: maximal runs of letters, digits and
/// combining marks, where an apostrophe between two word characters stays
/// inside the word ("don't"). Without strip_punctuation, every other
/// non-space code point becomes a one-character token. Tokens never span
/// whitespace. `lang` is accepted for interface stability; the uword-v1
/// rules are language independent.
std::vector<std::string> tokenize(std::string_view text, std::string_view lang,
                                  const TokenizationPolicy& policy = {});

/// Byte range [begin, end) of one sentence inside the input text.
struct SentenceSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Rule-based sentence splitter. A boundary follows a run of terminators
/// (. ! ? …) plus closing quotes/brackets when it is followed by whitespace,
/// optional opening quotes, and an upper-case letter. A period does not end
/// a sentence after a listed abbreviation of `lang`, or (German) after a
/// number, which is read as an ordinal. A blank line always ends a
/// sentence. Spans exclude surrounding whitespace.
std::vector<SentenceSpan> sentence_spans(std::string_view text, std::string_view lang);
std::vector<std::string> split_sentences(std::string_view text, std::string_view lang);

struct CorpusStats {
  std::size_t size = 0;
  double mean_doc_len = 0;
  double mean_summ_len = 0;
  double mean_sent_len_doc = 0;
  double mean_sent_len_summ = 0;
  double compression = 0;  // mean_doc_len / mean_summ_len

  std::size_t total_tokens_doc = 0;
  std::size_t total_tokens_summ = 0;
  std::size_t total_sentences_doc = 0;
  std::size_t total_sentences_summ = 0;
};

/// Token and sentence counts of a single text; sentences without tokens are
/// not counted.
struct TextCounts {
  std::size_t tokens = 0;
  std::size_t sentences = 0;
};
TextCounts count_text(std::string_view text, std::string_view lang,
                      const TokenizationPolicy& policy);

/// Length means are taken over pairs; sentence-length means are
/// micro-averages (total tokens / total sentences) per side. Throws
/// ValidationError if the summaries contain no tokens at all.
CorpusStats corpus_stats(const Corpus& corpus, const TokenizationPolicy& policy = {},
                         unsigned jobs = 1);

enum class JaccardMode {
  kCorpusVocabulary,  // one vocabulary per side over the whole corpus
  kPerPairMean,       // mean of per-pair Jaccard scores
};

double jaccard(const std::unordered_set<std::string>& a, const std::unordered_set<std::string>& b);

/// Lexical overlap |V_doc ∩ V_summ| / |V_doc ∪ V_summ|.
double jaccard_divergence(const Corpus& corpus, const TokenizationPolicy& policy = {},
                          JaccardMode mode = JaccardMode::kCorpusVocabulary);

/// Counts per bin of `bin_width` years, bins aligned at multiples of the
/// width; key is the first year of the bin. Throws if bin_width < 1.
std::map<int, std::size_t> year_histogram(std::span<const SummaryPair> pairs, int bin_width);

/// Report keyed by dataset, one column per statistic.
nlohmann::json stats_report(const Corpus& corpus, const CorpusStats& stats,
                            const TokenizationPolicy& policy);
nlohmann::json histogram_report(const std::map<int, std::size_t>& histogram, int bin_width);

}  // namespace clcts
