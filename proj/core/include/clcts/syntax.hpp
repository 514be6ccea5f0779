#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace clcts {

struct DependencyToken {
  int index = 0;  // 1-based position in the sentence
  std::string form;
  std::string upos;
  int head = 0;  // 0 = root
  std::string deprel;
};

/// A dependency tree with contiguous 1..n indices, one root, and every head
/// in 0..n and distinct from the token itself.
class ParsedSentence {
 public:
  /// Throws ValidationError when an invariant is violated.
  explicit ParsedSentence(std::vector<DependencyToken> tokens);

  const std::vector<DependencyToken>& tokens() const { return tokens_; }
  std::size_t size() const { return tokens_.size(); }

 private:
  std::vector<DependencyToken> tokens_;
};

struct ParsedDocument {
  std::string doc_id;
  std::vector<ParsedSentence> sentences;
};

/// Reads 10-column CoNLL-U. Document ids come from "# doc_id = X" (or the
/// standard "# newdoc id = X") comments and apply to the sentences that
/// follow; sentences before any id belong to the document "". Multiword
/// ranges ("3-4") and empty nodes ("5.1") are skipped. Documents are
/// returned in order of first appearance.
std::vector<ParsedDocument> parse_conllu(std::istream& in, const std::string& source);
std::vector<ParsedDocument> parse_conllu_file(const std::string& path);

struct MddOptions {
  bool exclude_punct = true;  // drop edges with a PUNCT endpoint
  bool exclude_root = true;   // when false the root edge counts with distance = root position
};

/// Sum of |head - dependent| over eligible edges, plus the edge count.
struct DistanceTotals {
  double distance_sum = 0;
  std::size_t edges = 0;
};
DistanceTotals sentence_distances(const ParsedSentence& s, const MddOptions& options = {});

/// Mean dependency distance; nullopt when the sentence has no eligible edge.
std::optional<double> sentence_mdd(const ParsedSentence& s, const MddOptions& options = {});

enum class MddAggregation {
  kMicro,  // mean over all eligible edges
  kMacro,  // mean of per-sentence MDDs
};

struct MddReport {
  double corpus_mdd = 0;
  std::map<std::string, double> per_document;  // documents without eligible edges are absent
  std::size_t edge_count = 0;
  std::size_t sentence_count = 0;  // sentences with at least one eligible edge
};

/// Throws ValidationError("no eligible edges") when nothing is eligible.
MddReport corpus_mdd(const std::vector<ParsedDocument>& documents, const MddOptions& options = {},
                     MddAggregation aggregation = MddAggregation::kMicro);

/// {"<dataset>": {"corpus_mdd": ..., "edge_count": ..., "per_document": {...}}}
nlohmann::json mdd_report(const std::string& dataset, const MddReport& report,
                          const MddOptions& options, MddAggregation aggregation);

}  // namespace clcts
