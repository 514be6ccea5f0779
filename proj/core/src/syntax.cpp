#include "clcts/syntax.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <istream>

#include "clcts/error.hpp"

namespace clcts {
namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> cols;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    cols.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return cols;
}

std::optional<int> parse_int(const std::string& s) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

// Value of "# key = value" comments, or nullopt.
std::optional<std::string> comment_value(const std::string& line, std::string_view key) {
  std::string body = trim(line.substr(1));
  if (body.compare(0, key.size(), key) != 0) return std::nullopt;
  std::string rest = trim(body.substr(key.size()));
  if (rest.empty() || rest.front() != '=') return std::nullopt;
  return trim(rest.substr(1));
}

}  // namespace

ParsedSentence::ParsedSentence(std::vector<DependencyToken> tokens) : tokens_(std::move(tokens)) {
  if (tokens_.empty()) throw ValidationError("empty sentence");
  const int n = static_cast<int>(tokens_.size());
  int roots = 0;
  for (int i = 0; i < n; ++i) {
    const auto& t = tokens_[i];
    if (t.index != i + 1)
      throw ValidationError("non-contiguous token ids: expected " + std::to_string(i + 1) + ", got " +
                            std::to_string(t.index));
    if (t.head < 0 || t.head > n)
      throw ValidationError("dangling head reference: token " + std::to_string(t.index) + " has head " +
                            std::to_string(t.head) + " in a sentence of " + std::to_string(n) +
                            " tokens");
    if (t.head == t.index)
      throw ValidationError("token " + std::to_string(t.index) + " is its own head");
    if (t.head == 0) ++roots;
  }
  if (roots == 0) throw ValidationError("sentence has no root");
  if (roots > 1) throw ValidationError("sentence has " + std::to_string(roots) + " roots");
}

std::vector<ParsedDocument> parse_conllu(std::istream& in, const std::string& source) {
  std::vector<ParsedDocument> docs;
  std::map<std::string, std::size_t> doc_index;
  std::string current_doc;
  std::vector<DependencyToken> tokens;
  std::size_t sentence_line = 0;

  auto flush = [&] {
    if (tokens.empty()) return;
    ParsedSentence sentence = [&] {
      try {
        return ParsedSentence(std::move(tokens));
      } catch (const ValidationError& e) {
        throw ValidationError(at_line(source, sentence_line, e.what()));
      }
    }();
    tokens.clear();
    auto [it, inserted] = doc_index.emplace(current_doc, docs.size());
    if (inserted) docs.push_back({current_doc, {}});
    docs[it->second].sentences.push_back(std::move(sentence));
  };

  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      flush();
      continue;
    }
    if (line.front() == '#') {
      if (auto id = comment_value(line, "doc_id")) {
        flush();
        current_doc = *id;
      } else if (auto nid = comment_value(line, "newdoc id")) {
        flush();
        current_doc = *nid;
      }
      continue;
    }
    const auto cols = split_tabs(line);
    if (cols.size() != 10)
      throw ValidationError(at_line(source, number, "expected 10 tab-separated columns, got " +
                                                        std::to_string(cols.size())));
    const auto& id = cols[0];
    if (id.find('-') != std::string::npos || id.find('.') != std::string::npos) continue;
    const auto index = parse_int(id);
    if (!index) throw ValidationError(at_line(source, number, "malformed token id '" + id + "'"));
    const auto head = parse_int(cols[6]);
    if (!head) throw ValidationError(at_line(source, number, "malformed head '" + cols[6] + "'"));
    if (tokens.empty()) sentence_line = number;
    tokens.push_back({*index, cols[1], cols[3], *head, cols[7]});
  }
  flush();
  return docs;
}

std::vector<ParsedDocument> parse_conllu_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  return parse_conllu(in, path);
}

DistanceTotals sentence_distances(const ParsedSentence& s, const MddOptions& options) {
  DistanceTotals totals;
  const auto& tokens = s.tokens();
  for (const auto& t : tokens) {
    if (options.exclude_punct && t.upos == "PUNCT") continue;
    if (t.head == 0) {
      if (options.exclude_root) continue;
      totals.distance_sum += t.index;
      ++totals.edges;
      continue;
    }
    if (options.exclude_punct && tokens[t.head - 1].upos == "PUNCT") continue;
    totals.distance_sum += std::abs(t.head - t.index);
    ++totals.edges;
  }
  return totals;
}

std::optional<double> sentence_mdd(const ParsedSentence& s, const MddOptions& options) {
  const auto t = sentence_distances(s, options);
  if (t.edges == 0) return std::nullopt;
  return t.distance_sum / static_cast<double>(t.edges);
}

MddReport corpus_mdd(const std::vector<ParsedDocument>& documents, const MddOptions& options,
                     MddAggregation aggregation) {
  MddReport report;
  double corpus_sum = 0;
  std::size_t corpus_count = 0;
  for (const auto& doc : documents) {
    double doc_sum = 0;
    std::size_t doc_count = 0;
    for (const auto& s : doc.sentences) {
      const auto t = sentence_distances(s, options);
      if (t.edges == 0) continue;
      report.edge_count += t.edges;
      ++report.sentence_count;
      if (aggregation == MddAggregation::kMicro) {
        doc_sum += t.distance_sum;
        doc_count += t.edges;
      } else {
        doc_sum += t.distance_sum / static_cast<double>(t.edges);
        ++doc_count;
      }
    }
    if (doc_count == 0) continue;
    report.per_document[doc.doc_id] = doc_sum / static_cast<double>(doc_count);
    corpus_sum += doc_sum;
    corpus_count += doc_count;
  }
  if (corpus_count == 0) throw ValidationError("no eligible edges");
  report.corpus_mdd = corpus_sum / static_cast<double>(corpus_count);
  return report;
}

nlohmann::json mdd_report(const std::string& dataset, const MddReport& report, const MddOptions& options,
                          MddAggregation aggregation) {
  nlohmann::json per_doc = nlohmann::json::object();
  for (const auto& [id, v] : report.per_document) per_doc[id] = v;
  return {{dataset,
           {{"corpus_mdd", report.corpus_mdd},
            {"edge_count", report.edge_count},
            {"sentence_count", report.sentence_count},
            {"aggregation", aggregation == MddAggregation::kMicro ? "micro" : "macro"},
            {"exclude_punct", options.exclude_punct},
            {"exclude_root", options.exclude_root},
            {"per_document", per_doc}}}};
}

}  // namespace clcts
