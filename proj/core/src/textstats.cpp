#include "clcts/textstats.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "clcts/data.hpp"
#include "clcts/error.hpp"
#include "clcts/parallel.hpp"
#include "clcts/unicode.hpp"

namespace clcts {
namespace {

using unicode::CodePoint;

bool is_terminator(CodePoint cp) { return cp == U'.' || cp == U'!' || cp == U'?' || cp == 0x2026; }

bool is_closing(CodePoint cp) {
  switch (cp) {
    case U'"': case U'\'': case U')': case U']': case 0x2019: case 0x201D: case 0x00BB:
    case 0x203A: case 0x201C:  // German closing quote is U+201C
      return true;
    default:
      return false;
  }
}

bool is_opening(CodePoint cp) {
  switch (cp) {
    case U'"': case U'\'': case U'(': case U'[': case 0x2018: case 0x201C: case 0x201E:
    case 0x201A: case 0x00AB: case 0x00BB: case 0x2039: case 0x203A: case U'-': case 0x2014:
    case 0x2013:
      return true;
    default:
      return false;
  }
}

struct AbbreviationLists {
  std::string version;
  std::map<std::string, std::set<std::string>, std::less<>> by_lang;
};

const AbbreviationLists& abbreviations() {
  static const AbbreviationLists lists = [] {
    AbbreviationLists out;
    const auto j = nlohmann::json::parse(data::get("abbreviations.v1.json"));
    out.version = j.at("version").get<std::string>();
    for (const auto& [key, value] : j.items()) {
      if (!value.is_array()) continue;
      auto& set = out.by_lang[key];
      for (const auto& a : value) set.insert(a.get<std::string>());
    }
    return out;
  }();
  return lists;
}

bool is_abbreviation(std::string_view lang, const std::string& token) {
  const auto& lists = abbreviations().by_lang;
  auto it = lists.find(base_language(lang));
  return it != lists.end() && it->second.count(unicode::to_lower(token)) > 0;
}

// Text of the "word" immediately before a terminator at char index `t`:
// letters, digits and inner periods back to whitespace or an opening mark.
std::string word_before(const std::vector<unicode::DecodedChar>& chars, std::size_t t,
                        std::string_view text) {
  std::size_t b = t;
  while (b > 0) {
    const CodePoint cp = chars[b - 1].cp;
    if (unicode::is_word_char(cp) || cp == U'.') --b;
    else break;
  }
  if (b == t) return {};
  const std::size_t begin = chars[b].offset;
  return std::string(text.substr(begin, chars[t].offset - begin));
}

bool all_digits(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

}  // namespace

std::string TokenizationPolicy::id() const {
  std::string out = rule_set;
  if (lowercase) out += "+lower";
  if (strip_punctuation) out += "+nopunct";
  return out;
}

std::vector<std::string> tokenize(std::string_view text, std::string_view /*lang*/,
                                  const TokenizationPolicy& policy) {
  std::vector<std::string> tokens;
  const auto chars = unicode::decode_with_offsets(text);
  const std::size_t n = chars.size();
  std::size_t i = 0;
  while (i < n) {
    const CodePoint cp = chars[i].cp;
    if (unicode::is_space(cp)) {
      ++i;
      continue;
    }
    if (unicode::is_word_char(cp)) {
      std::size_t j = i + 1;
      while (j < n) {
        if (unicode::is_word_char(chars[j].cp)) {
          ++j;
        } else if (unicode::is_apostrophe(chars[j].cp) && j + 1 < n &&
                   unicode::is_word_char(chars[j + 1].cp)) {
          j += 2;
        } else {
          break;
        }
      }
      const std::size_t begin = chars[i].offset;
      const std::size_t end = chars[j - 1].offset + chars[j - 1].length;
      std::string_view word = text.substr(begin, end - begin);
      tokens.push_back(policy.lowercase ? unicode::to_lower(word) : std::string(word));
      i = j;
      continue;
    }
    if (!policy.strip_punctuation) tokens.emplace_back(text.substr(chars[i].offset, chars[i].length));
    ++i;
  }
  return tokens;
}

std::vector<SentenceSpan> sentence_spans(std::string_view text, std::string_view lang) {
  std::vector<SentenceSpan> spans;
  const auto chars = unicode::decode_with_offsets(text);
  const std::size_t n = chars.size();
  const bool german = base_language(lang) == "de";

  std::size_t start = 0;  // char index where the current sentence begins
  auto skip_space = [&](std::size_t k) {
    while (k < n && unicode::is_space(chars[k].cp)) ++k;
    return k;
  };
  auto emit = [&](std::size_t begin_char, std::size_t end_char) {
    begin_char = skip_space(begin_char);
    while (end_char > begin_char && unicode::is_space(chars[end_char - 1].cp)) --end_char;
    if (end_char <= begin_char) return;
    spans.push_back({chars[begin_char].offset, chars[end_char - 1].offset + chars[end_char - 1].length});
  };

  std::size_t i = 0;
  while (i < n) {
    const CodePoint cp = chars[i].cp;

    // Blank line: a newline, optional horizontal space, another newline.
    if (cp == U'\n') {
      std::size_t k = i + 1;
      while (k < n && unicode::is_space(chars[k].cp) && chars[k].cp != U'\n') ++k;
      if (k < n && chars[k].cp == U'\n') {
        emit(start, i);
        start = skip_space(k);
        i = start;
        continue;
      }
    }

    if (!is_terminator(cp)) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && is_terminator(chars[j].cp)) ++j;
    while (j < n && is_closing(chars[j].cp)) ++j;
    if (j >= n || !unicode::is_space(chars[j].cp)) {
      i = j == i ? i + 1 : j;
      continue;
    }
    std::size_t k = skip_space(j);
    std::size_t m = k;
    while (m < n && is_opening(chars[m].cp)) ++m;
    const bool capital_follows = m < n && unicode::is_upper(chars[m].cp);

    bool boundary = capital_follows;
    if (boundary && cp == U'.' && j == i + 1) {
      const std::string word = word_before(chars, i, text);
      if (is_abbreviation(lang, word)) boundary = false;
      else if (german && all_digits(word)) boundary = false;
    }
    if (boundary) {
      emit(start, j);
      start = k;
    }
    i = j;
  }
  emit(start, n);
  return spans;
}

std::vector<std::string> split_sentences(std::string_view text, std::string_view lang) {
  std::vector<std::string> out;
  for (const auto& s : sentence_spans(text, lang)) out.emplace_back(text.substr(s.begin, s.end - s.begin));
  return out;
}

TextCounts count_text(std::string_view text, std::string_view lang, const TokenizationPolicy& policy) {
  TextCounts c;
  for (const auto& s : sentence_spans(text, lang)) {
    const auto n = tokenize(text.substr(s.begin, s.end - s.begin), lang, policy).size();
    if (n == 0) continue;
    c.tokens += n;
    ++c.sentences;
  }
  return c;
}

CorpusStats corpus_stats(const Corpus& corpus, const TokenizationPolicy& policy, unsigned jobs) {
  const auto& pairs = corpus.pairs();
  std::vector<std::pair<TextCounts, TextCounts>> counts(pairs.size());
  parallel_for(pairs.size(), jobs, [&](std::size_t i) {
    counts[i] = {count_text(pairs[i].document, pairs[i].lang_src, policy),
                 count_text(pairs[i].summary, pairs[i].lang_tgt, policy)};
  });

  CorpusStats s;
  s.size = pairs.size();
  for (const auto& [doc, summ] : counts) {
    s.total_tokens_doc += doc.tokens;
    s.total_sentences_doc += doc.sentences;
    s.total_tokens_summ += summ.tokens;
    s.total_sentences_summ += summ.sentences;
  }
  if (s.total_tokens_summ == 0) throw ValidationError("corpus '" + corpus.name() + "': summaries contain no tokens");
  if (s.total_tokens_doc == 0) throw ValidationError("corpus '" + corpus.name() + "': documents contain no tokens");
  const auto n = static_cast<double>(s.size);
  s.mean_doc_len = static_cast<double>(s.total_tokens_doc) / n;
  s.mean_summ_len = static_cast<double>(s.total_tokens_summ) / n;
  s.mean_sent_len_doc = static_cast<double>(s.total_tokens_doc) / static_cast<double>(s.total_sentences_doc);
  s.mean_sent_len_summ =
      static_cast<double>(s.total_tokens_summ) / static_cast<double>(s.total_sentences_summ);
  s.compression = s.mean_doc_len / s.mean_summ_len;
  return s;
}

double jaccard(const std::unordered_set<std::string>& a, const std::unordered_set<std::string>& b) {
  if (a.empty() && b.empty()) throw ValidationError("jaccard: both vocabularies are empty");
  const auto& small = a.size() <= b.size() ? a : b;
  const auto& large = a.size() <= b.size() ? b : a;
  std::size_t inter = 0;
  for (const auto& w : small) inter += large.count(w);
  const std::size_t uni = a.size() + b.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double jaccard_divergence(const Corpus& corpus, const TokenizationPolicy& policy, JaccardMode mode) {
  auto vocab = [&](std::string_view text, std::string_view lang, std::unordered_set<std::string>& v) {
    for (auto& t : tokenize(text, lang, policy)) v.insert(std::move(t));
  };
  if (mode == JaccardMode::kCorpusVocabulary) {
    std::unordered_set<std::string> docs, summs;
    for (const auto& p : corpus.pairs()) {
      vocab(p.document, p.lang_src, docs);
      vocab(p.summary, p.lang_tgt, summs);
    }
    return jaccard(docs, summs);
  }
  double sum = 0;
  for (const auto& p : corpus.pairs()) {
    std::unordered_set<std::string> d, s;
    vocab(p.document, p.lang_src, d);
    vocab(p.summary, p.lang_tgt, s);
    sum += jaccard(d, s);
  }
  return sum / static_cast<double>(corpus.size());
}

std::map<int, std::size_t> year_histogram(std::span<const SummaryPair> pairs, int bin_width) {
  if (bin_width < 1) throw ValidationError("bin width must be at least 1 year");
  std::map<int, std::size_t> bins;
  for (const auto& p : pairs) {
    const int start = static_cast<int>(std::floor(static_cast<double>(p.year) / bin_width)) * bin_width;
    ++bins[start];
  }
  return bins;
}

nlohmann::json stats_report(const Corpus& corpus, const CorpusStats& s, const TokenizationPolicy& policy) {
  return {
      {"Dataset", corpus.name()},
      {"Direction", to_string(corpus.direction())},
      {"Size", s.size},
      {"Mean Length Doc.", s.mean_doc_len},
      {"Mean Length Summ.", s.mean_summ_len},
      {"Sentence Doc.", s.mean_sent_len_doc},
      {"Sentence Summ.", s.mean_sent_len_summ},
      {"Compression", s.compression},
      {"totals",
       {{"tokens_doc", s.total_tokens_doc},
        {"tokens_summ", s.total_tokens_summ},
        {"sentences_doc", s.total_sentences_doc},
        {"sentences_summ", s.total_sentences_summ}}},
      {"tokenization_policy", policy.id()},
      {"abbreviation_lists", abbreviations().version},
  };
}

nlohmann::json histogram_report(const std::map<int, std::size_t>& histogram, int bin_width) {
  nlohmann::json bins = nlohmann::json::array();
  for (const auto& [start, count] : histogram)
    bins.push_back({{"bin", std::to_string(start) + "-" + std::to_string(start + bin_width - 1)},
                    {"start", start},
                    {"count", count}});
  return {{"bin_width", bin_width}, {"bins", bins}};
}

}  // namespace clcts
