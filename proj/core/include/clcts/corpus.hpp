#pragma once

#include <array>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace clcts {

/// Language direction of a corpus. `h` marks a historical source side.
enum class Direction { kHDeEn, kHEnDe, kHDeDe, kHEnEn, kExternal };

std::string_view to_string(Direction d);
/// Accepts "hDe-En", "hEn-De", "hDe-De", "hEn-En", "external".
Direction parse_direction(std::string_view text);
/// True for hDe-En and hEn-De.
bool is_cross_lingual(Direction d);
/// Base language of the document side ("de" or "en"); empty for external.
std::string_view source_language(Direction d);
/// Base language of the summary side; empty for external.
std::string_view target_language(Direction d);

/// Strips an era/region suffix: "de-hist" -> "de", "EN" -> "en".
std::string base_language(std::string_view tag);

struct SummaryPair {
  std::string id;
  std::string title;
  std::string author;
  int year = 0;
  std::string lang_src;  // language code with optional era tag, e.g. "de-hist"
  std::string lang_tgt;
  std::string document;
  std::string summary;
  bool summary_translated = false;
  std::string provenance;

  bool operator==(const SummaryPair&) const = default;
};

/// Validated, immutable collection of pairs sharing one direction.
class Corpus {
 public:
  /// Throws ValidationError on an empty pair list, duplicate ids, or any
  /// pair violating the SummaryPair invariants or the direction.
  Corpus(std::string name, Direction direction, std::vector<SummaryPair> pairs);

  const std::string& name() const { return name_; }
  Direction direction() const { return direction_; }
  const std::vector<SummaryPair>& pairs() const { return pairs_; }
  std::size_t size() const { return pairs_.size(); }
  const SummaryPair* find(std::string_view id) const;

 private:
  std::string name_;
  Direction direction_;
  std::vector<SummaryPair> pairs_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Checks a single pair against the invariants and `direction`; returns an
/// error message or an empty string.
std::string validate_pair(const SummaryPair& pair, Direction direction);

/// Reads corpus JSONL (one SummaryPair object per line, UTF-8, no BOM).
/// Rejects malformed rows with the offending line number; a duplicate id
/// error cites both lines. The corpus is named after the file stem.
Corpus load_corpus(const std::string& path, Direction direction);
Corpus parse_corpus(std::istream& in, const std::string& source, std::string name,
                    Direction direction);
void write_corpus(std::ostream& out, const Corpus& corpus);

// ---------------------------------------------------------------------------
// Sentence embeddings

enum class Side { kDocument, kSummary };
std::string_view to_string(Side side);

struct DocumentEmbeddings {
  std::vector<std::vector<double>> document;  // indexed by sentence
  std::vector<std::vector<double>> summary;
};

class EmbeddingTable {
 public:
  EmbeddingTable(std::string model, std::size_t dimension,
                 std::map<std::string, DocumentEmbeddings, std::less<>> docs);

  const std::string& model() const { return model_; }
  std::size_t dimension() const { return dimension_; }
  const DocumentEmbeddings* find(std::string_view doc_id) const;
  const std::map<std::string, DocumentEmbeddings, std::less<>>& documents() const { return docs_; }

 private:
  std::string model_;
  std::size_t dimension_;
  std::map<std::string, DocumentEmbeddings, std::less<>> docs_;
};

/// Reads embeddings JSONL. The first line may be a header record
/// {"model": ..., "dimension": ...}; without it the dimension is taken from
/// the first vector and the model id is "unknown". Every later line is
/// {"doc_id", "side", "sent_idx", "vector"}.
EmbeddingTable ingest_embeddings(const std::string& path);
EmbeddingTable parse_embeddings(std::istream& in, const std::string& source);
void write_embeddings(std::ostream& out, const EmbeddingTable& table);

// ---------------------------------------------------------------------------
// Metric scores

enum class Provenance { kNative, kIngested, kDerived };
std::string_view to_string(Provenance p);
Provenance parse_provenance(std::string_view text);

struct ScoreKey {
  std::string doc_id;
  std::string system_id;
  std::string metric;

  auto operator<=>(const ScoreKey&) const = default;
};

struct ScoreRow {
  std::string doc_id;
  std::string system_id;
  std::string metric_name;
  double value = 0.0;
  Provenance provenance = Provenance::kIngested;
  std::string config;  // e.g. ROUGE settings and tokenization policy

  ScoreKey key() const { return {doc_id, system_id, metric_name}; }
};

/// At most one row per (doc_id, system_id, metric_name); rows are kept in
/// key order so serialization is deterministic.
class MetricScoreTable {
 public:
  /// Throws ValidationError on a duplicate key or non-finite value.
  void insert(ScoreRow row);
  std::optional<double> find(std::string_view doc_id, std::string_view system_id,
                             std::string_view metric) const;
  const ScoreRow* find_row(const ScoreKey& key) const;
  std::vector<ScoreRow> rows() const;
  std::set<std::string> metrics() const;
  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }

 private:
  std::map<ScoreKey, ScoreRow> rows_;
};

inline const std::vector<std::string> kScoresHeader = {"doc_id", "system_id", "metric_name",
                                                       "value"};
inline const std::vector<std::string> kScoresHeaderExtended = {
    "doc_id", "system_id", "metric_name", "value", "provenance", "config"};

/// Reads a scores CSV. Accepts the four-column header or the extended
/// header with provenance and config columns written by `score`.
MetricScoreTable ingest_scores(const std::string& path);
MetricScoreTable parse_scores(std::istream& in, const std::string& source);
void write_scores(std::ostream& out, const MetricScoreTable& table, bool extended);

// ---------------------------------------------------------------------------
// Likert annotations

enum class RaterKind { kHuman, kLlm };
std::string_view to_string(RaterKind k);

enum class Dimension { kCoherence = 0, kConsistency = 1, kFluency = 2, kRelevance = 3 };
inline constexpr std::array<Dimension, 4> kAllDimensions = {
    Dimension::kCoherence, Dimension::kConsistency, Dimension::kFluency, Dimension::kRelevance};
std::string_view to_string(Dimension d);
Dimension parse_dimension(std::string_view text);

/// A rating is valid when it lies in [1, 5] and is a multiple of 0.5.
bool is_valid_rating(double r);

struct AnnotationRecord {
  std::string doc_id;
  std::string system_id;
  std::string rater_id;
  RaterKind rater_kind = RaterKind::kHuman;
  std::array<double, 4> ratings{};  // indexed by Dimension

  double rating(Dimension d) const { return ratings[static_cast<std::size_t>(d)]; }
};

inline const std::vector<std::string> kAnnotationsHeader = {
    "doc_id", "system_id", "rater_id", "rater_kind",
    "coherence", "consistency", "fluency", "relevance"};

/// Reads an annotations CSV; rejects off-grid or out-of-range ratings and
/// duplicate (doc_id, system_id, rater_id) rows.
std::vector<AnnotationRecord> ingest_annotations(const std::string& path);
std::vector<AnnotationRecord> parse_annotations(std::istream& in, const std::string& source);
void write_annotations(std::ostream& out, const std::vector<AnnotationRecord>& records);

/// Shortest decimal text that round-trips `v` ("0.5", "1398.4", "1e-07").
std::string format_double(double v);
/// Strict full-string decimal parse; throws ValidationError mentioning `what`.
double parse_double(std::string_view text, const std::string& what);

}  // namespace clcts
