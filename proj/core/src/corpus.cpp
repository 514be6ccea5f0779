#include "clcts/corpus.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "clcts/csv.hpp"
#include "clcts/error.hpp"

namespace clcts {
namespace {

using nlohmann::json;

struct Line {
  std::size_t number;
  std::string text;
};

// Non-blank lines of a JSONL stream with their 1-based numbers.
std::vector<Line> read_lines(std::istream& in, const std::string& source) {
  std::vector<Line> lines;
  std::string text;
  std::size_t number = 0;
  while (std::getline(in, text)) {
    ++number;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (number == 1 && text.compare(0, 3, "\xEF\xBB\xBF") == 0)
      throw ValidationError(at_line(source, 1, "byte-order mark not allowed"));
    if (text.find_first_not_of(" \t") == std::string::npos) continue;
    lines.push_back({number, std::move(text)});
  }
  return lines;
}

json parse_object(const Line& line, const std::string& source) {
  json j;
  try {
    j = json::parse(line.text);
  } catch (const json::parse_error& e) {
    throw ValidationError(at_line(source, line.number, std::string("JSON parse error: ") + e.what()));
  }
  if (!j.is_object()) throw ValidationError(at_line(source, line.number, "expected a JSON object"));
  return j;
}

template <typename T>
T require(const json& j, const char* key, const std::string& source, std::size_t line) {
  auto it = j.find(key);
  if (it == j.end())
    throw ValidationError(at_line(source, line, std::string("missing key '") + key + "'"));
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ValidationError(at_line(source, line, std::string("wrong type for key '") + key + "'"));
  }
}

void reject_unknown_keys(const json& j, std::initializer_list<std::string_view> known,
                         const std::string& source, std::size_t line) {
  for (const auto& [key, value] : j.items()) {
    bool found = false;
    for (auto k : known) found = found || key == k;
    if (!found) throw ValidationError(at_line(source, line, "unknown key '" + key + "'"));
  }
}

std::string file_stem(const std::string& path) {
  return std::filesystem::path(path).stem().string();
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  return in;
}

}  // namespace

// ---------------------------------------------------------------------------

std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::kHDeEn: return "hDe-En";
    case Direction::kHEnDe: return "hEn-De";
    case Direction::kHDeDe: return "hDe-De";
    case Direction::kHEnEn: return "hEn-En";
    case Direction::kExternal: return "external";
  }
  return "external";
}

Direction parse_direction(std::string_view text) {
  for (auto d : {Direction::kHDeEn, Direction::kHEnDe, Direction::kHDeDe, Direction::kHEnEn,
                 Direction::kExternal})
    if (text == to_string(d)) return d;
  throw ValidationError("unknown direction '" + std::string(text) +
                        "' (expected hDe-En, hEn-De, hDe-De, hEn-En or external)");
}

bool is_cross_lingual(Direction d) { return d == Direction::kHDeEn || d == Direction::kHEnDe; }

std::string_view source_language(Direction d) {
  switch (d) {
    case Direction::kHDeEn:
    case Direction::kHDeDe: return "de";
    case Direction::kHEnDe:
    case Direction::kHEnEn: return "en";
    case Direction::kExternal: return "";
  }
  return "";
}

std::string_view target_language(Direction d) {
  switch (d) {
    case Direction::kHDeEn:
    case Direction::kHEnEn: return "en";
    case Direction::kHEnDe:
    case Direction::kHDeDe: return "de";
    case Direction::kExternal: return "";
  }
  return "";
}

std::string base_language(std::string_view tag) {
  std::string out;
  for (char c : tag) {
    if (c == '-' || c == '_') break;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

std::string validate_pair(const SummaryPair& p, Direction direction) {
  if (p.id.empty()) return "empty id";
  if (p.year <= 0) return "year must be positive (got " + std::to_string(p.year) + ")";
  if (p.document.empty()) return "empty document";
  if (p.summary.empty()) return "empty summary";
  const std::string src = base_language(p.lang_src);
  const std::string tgt = base_language(p.lang_tgt);
  if (src.empty() || tgt.empty()) return "missing language code";
  if (direction == Direction::kExternal) return {};
  if (src != source_language(direction) || tgt != target_language(direction))
    return "direction mismatch: pair is " + p.lang_src + "->" + p.lang_tgt + ", corpus is " +
           std::string(to_string(direction));
  return {};
}

Corpus::Corpus(std::string name, Direction direction, std::vector<SummaryPair> pairs)
    : name_(std::move(name)), direction_(direction), pairs_(std::move(pairs)) {
  if (pairs_.empty()) throw ValidationError("empty corpus");
  for (std::size_t i = 0; i < pairs_.size(); ++i) {
    if (auto err = validate_pair(pairs_[i], direction_); !err.empty())
      throw ValidationError("pair '" + pairs_[i].id + "': " + err);
    auto [it, inserted] = index_.emplace(pairs_[i].id, i);
    if (!inserted) throw ValidationError("duplicate id '" + pairs_[i].id + "'");
  }
}

const SummaryPair* Corpus::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &pairs_[it->second];
}

Corpus parse_corpus(std::istream& in, const std::string& source, std::string name,
                    Direction direction) {
  const auto lines = read_lines(in, source);
  if (lines.empty()) throw ValidationError(source + ": empty corpus");
  std::vector<SummaryPair> pairs;
  std::unordered_map<std::string, std::size_t> first_line;
  for (const auto& line : lines) {
    const json j = parse_object(line, source);
    reject_unknown_keys(j,
                        {"id", "title", "author", "year", "lang_src", "lang_tgt", "document",
                         "summary", "summary_translated", "provenance"},
                        source, line.number);
    SummaryPair p;
    p.id = require<std::string>(j, "id", source, line.number);
    p.title = require<std::string>(j, "title", source, line.number);
    p.author = require<std::string>(j, "author", source, line.number);
    if (!j.contains("year") || !j["year"].is_number_integer())
      throw ValidationError(at_line(source, line.number, "'year' must be an integer"));
    p.year = j["year"].get<int>();
    p.lang_src = require<std::string>(j, "lang_src", source, line.number);
    p.lang_tgt = require<std::string>(j, "lang_tgt", source, line.number);
    p.document = require<std::string>(j, "document", source, line.number);
    p.summary = require<std::string>(j, "summary", source, line.number);
    if (!j.contains("summary_translated") || !j["summary_translated"].is_boolean())
      throw ValidationError(at_line(source, line.number, "'summary_translated' must be a boolean"));
    p.summary_translated = j["summary_translated"].get<bool>();
    p.provenance = require<std::string>(j, "provenance", source, line.number);

    if (auto err = validate_pair(p, direction); !err.empty())
      throw ValidationError(at_line(source, line.number, err));
    auto [it, inserted] = first_line.emplace(p.id, line.number);
    if (!inserted)
      throw ValidationError(source + ": duplicate id '" + p.id + "' on lines " +
                            std::to_string(it->second) + " and " + std::to_string(line.number));
    pairs.push_back(std::move(p));
  }
  return Corpus(std::move(name), direction, std::move(pairs));
}

Corpus load_corpus(const std::string& path, Direction direction) {
  auto in = open_or_throw(path);
  return parse_corpus(in, path, file_stem(path), direction);
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
  for (const auto& p : corpus.pairs()) {
    json j = {{"id", p.id},
              {"title", p.title},
              {"author", p.author},
              {"year", p.year},
              {"lang_src", p.lang_src},
              {"lang_tgt", p.lang_tgt},
              {"document", p.document},
              {"summary", p.summary},
              {"summary_translated", p.summary_translated},
              {"provenance", p.provenance}};
    out << j.dump() << '\n';
  }
}

// ---------------------------------------------------------------------------

std::string_view to_string(Side side) {
  return side == Side::kDocument ? "document" : "summary";
}

EmbeddingTable::EmbeddingTable(std::string model, std::size_t dimension,
                               std::map<std::string, DocumentEmbeddings, std::less<>> docs)
    : model_(std::move(model)), dimension_(dimension), docs_(std::move(docs)) {
  if (dimension_ == 0) throw ValidationError("embedding dimension must be positive");
  for (const auto& [id, d] : docs_)
    for (const auto* side : {&d.document, &d.summary})
      for (const auto& v : *side)
        if (v.size() != dimension_)
          throw ValidationError("embedding for '" + id + "' has dimension " +
                                std::to_string(v.size()) + ", expected " +
                                std::to_string(dimension_));
}

const DocumentEmbeddings* EmbeddingTable::find(std::string_view doc_id) const {
  auto it = docs_.find(doc_id);
  return it == docs_.end() ? nullptr : &it->second;
}

EmbeddingTable parse_embeddings(std::istream& in, const std::string& source) {
  const auto lines = read_lines(in, source);
  if (lines.empty()) throw ValidationError(source + ": empty embeddings file");

  std::string model = "unknown";
  std::optional<std::size_t> dimension;
  std::size_t first = 0;
  {
    const json head = parse_object(lines.front(), source);
    if (head.contains("model") || head.contains("dimension")) {
      reject_unknown_keys(head, {"model", "dimension"}, source, lines.front().number);
      model = require<std::string>(head, "model", source, lines.front().number);
      const auto dim = require<long long>(head, "dimension", source, lines.front().number);
      if (dim <= 0)
        throw ValidationError(at_line(source, lines.front().number, "dimension must be positive"));
      dimension = static_cast<std::size_t>(dim);
      first = 1;
    }
  }

  using Slot = std::map<long long, std::pair<std::vector<double>, std::size_t>>;
  std::map<std::string, std::array<Slot, 2>, std::less<>> raw;
  for (std::size_t i = first; i < lines.size(); ++i) {
    const auto& line = lines[i];
    const json j = parse_object(line, source);
    reject_unknown_keys(j, {"doc_id", "side", "sent_idx", "vector"}, source, line.number);
    const auto doc_id = require<std::string>(j, "doc_id", source, line.number);
    const auto side_text = require<std::string>(j, "side", source, line.number);
    if (side_text != "document" && side_text != "summary")
      throw ValidationError(at_line(source, line.number, "side must be 'document' or 'summary'"));
    const auto side = side_text == "document" ? 0 : 1;
    if (!j.contains("sent_idx") || !j["sent_idx"].is_number_integer())
      throw ValidationError(at_line(source, line.number, "'sent_idx' must be an integer"));
    const auto idx = j["sent_idx"].get<long long>();
    if (idx < 0) throw ValidationError(at_line(source, line.number, "negative sent_idx"));
    const auto vec = require<std::vector<double>>(j, "vector", source, line.number);
    const std::string key = doc_id + "/" + side_text + "/" + std::to_string(idx);
    if (vec.empty()) throw ValidationError(at_line(source, line.number, "empty vector for " + key));
    if (!dimension) dimension = vec.size();
    if (vec.size() != *dimension)
      throw ValidationError(at_line(source, line.number,
                                    "dimension mismatch for " + key + ": got " +
                                        std::to_string(vec.size()) + ", expected " +
                                        std::to_string(*dimension)));
    for (double x : vec)
      if (!std::isfinite(x))
        throw ValidationError(at_line(source, line.number, "non-finite component in " + key));
    auto& slot = raw[doc_id][side];
    auto [it, inserted] = slot.emplace(idx, std::make_pair(vec, line.number));
    if (!inserted)
      throw ValidationError(source + ": duplicate key " + key + " on lines " +
                            std::to_string(it->second.second) + " and " +
                            std::to_string(line.number));
  }
  if (!dimension) throw ValidationError(source + ": no vectors and no header dimension");

  std::map<std::string, DocumentEmbeddings, std::less<>> docs;
  for (auto& [doc_id, sides] : raw) {
    DocumentEmbeddings d;
    for (int s = 0; s < 2; ++s) {
      auto& target = s == 0 ? d.document : d.summary;
      long long expected = 0;
      for (auto& [idx, entry] : sides[s]) {
        if (idx != expected)
          throw ValidationError(source + ": sentence indices for " + doc_id + "/" +
                                (s == 0 ? "document" : "summary") + " are not contiguous from 0 (missing " +
                                std::to_string(expected) + ")");
        target.push_back(std::move(entry.first));
        ++expected;
      }
    }
    docs.emplace(doc_id, std::move(d));
  }
  return EmbeddingTable(std::move(model), *dimension, std::move(docs));
}

EmbeddingTable ingest_embeddings(const std::string& path) {
  auto in = open_or_throw(path);
  return parse_embeddings(in, path);
}

void write_embeddings(std::ostream& out, const EmbeddingTable& table) {
  out << json{{"model", table.model()}, {"dimension", table.dimension()}}.dump() << '\n';
  for (const auto& [doc_id, d] : table.documents()) {
    for (auto side : {Side::kDocument, Side::kSummary}) {
      const auto& vecs = side == Side::kDocument ? d.document : d.summary;
      for (std::size_t i = 0; i < vecs.size(); ++i)
        out << json{{"doc_id", doc_id}, {"side", to_string(side)}, {"sent_idx", i}, {"vector", vecs[i]}}
                   .dump()
            << '\n';
    }
  }
}

// ---------------------------------------------------------------------------

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::kNative: return "native";
    case Provenance::kIngested: return "ingested";
    case Provenance::kDerived: return "derived";
  }
  return "ingested";
}

Provenance parse_provenance(std::string_view text) {
  if (text == "native") return Provenance::kNative;
  if (text == "ingested") return Provenance::kIngested;
  if (text == "derived") return Provenance::kDerived;
  throw ValidationError("unknown provenance '" + std::string(text) + "'");
}

void MetricScoreTable::insert(ScoreRow row) {
  if (!std::isfinite(row.value))
    throw ValidationError("non-finite score for " + row.doc_id + "/" + row.system_id + "/" +
                          row.metric_name);
  auto key = row.key();
  auto [it, inserted] = rows_.emplace(key, std::move(row));
  if (!inserted)
    throw ValidationError("duplicate score key " + key.doc_id + "/" + key.system_id + "/" +
                          key.metric);
}

std::optional<double> MetricScoreTable::find(std::string_view doc_id, std::string_view system_id,
                                             std::string_view metric) const {
  auto it = rows_.find(ScoreKey{std::string(doc_id), std::string(system_id), std::string(metric)});
  if (it == rows_.end()) return std::nullopt;
  return it->second.value;
}

const ScoreRow* MetricScoreTable::find_row(const ScoreKey& key) const {
  auto it = rows_.find(key);
  return it == rows_.end() ? nullptr : &it->second;
}

std::vector<ScoreRow> MetricScoreTable::rows() const {
  std::vector<ScoreRow> out;
  out.reserve(rows_.size());
  for (const auto& [k, r] : rows_) out.push_back(r);
  return out;
}

std::set<std::string> MetricScoreTable::metrics() const {
  std::set<std::string> out;
  for (const auto& [k, r] : rows_) out.insert(k.metric);
  return out;
}

MetricScoreTable parse_scores(std::istream& in, const std::string& source) {
  auto records = csv::parse(in, source);
  if (records.empty()) throw ValidationError(source + ": empty file (missing header)");
  const auto& header = records.front().fields;
  const bool extended = header == kScoresHeaderExtended;
  if (!extended && header != kScoresHeader)
    throw ValidationError(at_line(source, records.front().line,
                                  "expected header 'doc_id,system_id,metric_name,value'"));
  const std::size_t width = header.size();
  MetricScoreTable table;
  std::map<ScoreKey, std::size_t> seen;
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.fields.size() != width)
      throw ValidationError(at_line(source, r.line, "expected " + std::to_string(width) +
                                                        " fields, got " +
                                                        std::to_string(r.fields.size())));
    ScoreRow row;
    row.doc_id = r.fields[0];
    row.system_id = r.fields[1];
    row.metric_name = r.fields[2];
    if (row.doc_id.empty() || row.system_id.empty() || row.metric_name.empty())
      throw ValidationError(at_line(source, r.line, "empty key field"));
    try {
      row.value = parse_double(r.fields[3], "value");
      if (!std::isfinite(row.value)) throw ValidationError("value must be finite");
      if (extended) {
        row.provenance = parse_provenance(r.fields[4]);
        row.config = r.fields[5];
      }
    } catch (const ValidationError& e) {
      throw ValidationError(at_line(source, r.line, e.what()));
    }
    auto [it, inserted] = seen.emplace(row.key(), r.line);
    if (!inserted)
      throw ValidationError(source + ": duplicate key " + row.doc_id + "/" + row.system_id + "/" +
                            row.metric_name + " on lines " + std::to_string(it->second) + " and " +
                            std::to_string(r.line));
    table.insert(std::move(row));
  }
  return table;
}

MetricScoreTable ingest_scores(const std::string& path) {
  auto in = open_or_throw(path);
  return parse_scores(in, path);
}

void write_scores(std::ostream& out, const MetricScoreTable& table, bool extended) {
  csv::write_row(out, extended ? kScoresHeaderExtended : kScoresHeader);
  for (const auto& row : table.rows()) {
    std::vector<std::string> fields = {row.doc_id, row.system_id, row.metric_name,
                                       format_double(row.value)};
    if (extended) {
      fields.emplace_back(to_string(row.provenance));
      fields.push_back(row.config);
    }
    csv::write_row(out, fields);
  }
}

// ---------------------------------------------------------------------------

std::string_view to_string(RaterKind k) { return k == RaterKind::kHuman ? "human" : "llm"; }

std::string_view to_string(Dimension d) {
  switch (d) {
    case Dimension::kCoherence: return "coherence";
    case Dimension::kConsistency: return "consistency";
    case Dimension::kFluency: return "fluency";
    case Dimension::kRelevance: return "relevance";
  }
  return "coherence";
}

Dimension parse_dimension(std::string_view text) {
  for (auto d : kAllDimensions)
    if (text == to_string(d)) return d;
  throw ValidationError("unknown dimension '" + std::string(text) +
                        "' (expected coherence, consistency, fluency or relevance)");
}

bool is_valid_rating(double r) {
  if (!std::isfinite(r) || r < 1.0 || r > 5.0) return false;
  const double twice = 2.0 * r;
  return twice == std::floor(twice);
}

std::vector<AnnotationRecord> parse_annotations(std::istream& in, const std::string& source) {
  auto records = csv::parse(in, source);
  if (records.empty()) throw ValidationError(source + ": empty file (missing header)");
  if (records.front().fields != kAnnotationsHeader)
    throw ValidationError(at_line(source, records.front().line,
                                  "expected header "
                                  "'doc_id,system_id,rater_id,rater_kind,coherence,consistency,"
                                  "fluency,relevance'"));
  std::vector<AnnotationRecord> out;
  std::map<std::array<std::string, 3>, std::size_t> seen;
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.fields.size() != kAnnotationsHeader.size())
      throw ValidationError(at_line(source, r.line, "expected 8 fields, got " +
                                                        std::to_string(r.fields.size())));
    AnnotationRecord a;
    a.doc_id = r.fields[0];
    a.system_id = r.fields[1];
    a.rater_id = r.fields[2];
    if (a.doc_id.empty() || a.system_id.empty() || a.rater_id.empty())
      throw ValidationError(at_line(source, r.line, "empty key field"));
    if (r.fields[3] == "human") a.rater_kind = RaterKind::kHuman;
    else if (r.fields[3] == "llm") a.rater_kind = RaterKind::kLlm;
    else throw ValidationError(at_line(source, r.line, "rater_kind must be 'human' or 'llm'"));
    for (auto d : kAllDimensions) {
      const auto idx = static_cast<std::size_t>(d);
      double v = 0;
      try {
        v = parse_double(r.fields[4 + idx], std::string(to_string(d)));
      } catch (const ValidationError& e) {
        throw ValidationError(at_line(source, r.line, e.what()));
      }
      if (!is_valid_rating(v))
        throw ValidationError(at_line(source, r.line,
                                      std::string(to_string(d)) + " rating " + r.fields[4 + idx] +
                                          " is not in [1,5] in steps of 0.5"));
      a.ratings[idx] = v;
    }
    auto [it, inserted] = seen.emplace(std::array{a.doc_id, a.system_id, a.rater_id}, r.line);
    if (!inserted)
      throw ValidationError(source + ": duplicate annotation " + a.doc_id + "/" + a.system_id +
                            "/" + a.rater_id + " on lines " + std::to_string(it->second) +
                            " and " + std::to_string(r.line));
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<AnnotationRecord> ingest_annotations(const std::string& path) {
  auto in = open_or_throw(path);
  return parse_annotations(in, path);
}

void write_annotations(std::ostream& out, const std::vector<AnnotationRecord>& records) {
  csv::write_row(out, kAnnotationsHeader);
  for (const auto& a : records) {
    std::vector<std::string> fields = {a.doc_id, a.system_id, a.rater_id,
                                       std::string(to_string(a.rater_kind))};
    for (double r : a.ratings) fields.push_back(format_double(r));
    csv::write_row(out, fields);
  }
}

// ---------------------------------------------------------------------------

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) return std::to_string(v);
  return std::string(buf, ptr);
}

double parse_double(std::string_view text, const std::string& what) {
  std::string_view t = text;
  while (!t.empty() && (t.front() == ' ' || t.front() == '\t')) t.remove_prefix(1);
  while (!t.empty() && (t.back() == ' ' || t.back() == '\t')) t.remove_suffix(1);
  if (!t.empty() && t.front() == '+') t.remove_prefix(1);
  double v = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size())
    throw ValidationError(what + ": cannot parse '" + std::string(text) + "' as a number");
  return v;
}

}  // namespace clcts
