#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "clcts/corpus.hpp"
#include "clcts/metaeval.hpp"

namespace clcts {

/// Uniform integer in [0, bound) from a 64-bit engine, by rejection so that
/// every value is equally likely. Independent of the standard library's
/// distribution implementations, so results are portable across toolchains.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound);

/// First `k` elements of a Fisher-Yates shuffle of 0..n-1, driven by
/// mt19937_64 seeded with `seed`.
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, std::uint64_t seed);

struct OmissionResult {
  std::string text;
  std::vector<std::size_t> dropped;  // sentence indices, ascending
  std::size_t sentence_count = 0;
};

/// Removes floor(fraction * n) of the n sentences, chosen with
/// sample_indices(n, k, seed). Kept sentences stay in order, each preceded
/// by the whitespace that preceded it in the original. fraction must lie in
/// [0, 1); removing every sentence is an error.
OmissionResult omit_sentences(std::string_view document, double fraction, std::uint64_t seed,
                              std::string_view lang);

/// Ids of documents whose sentence count lies in [min_sents, max_sents], in
/// corpus order.
std::vector<std::string> select_omission_candidates(const Corpus& corpus, std::size_t min_sents = 100,
                                                    std::size_t max_sents = 150);

/// `k` ids drawn without replacement (seeded), returned in input order.
std::vector<std::string> sample_documents(const std::vector<std::string>& ids, std::size_t k,
                                          std::uint64_t seed);

struct SwapResult {
  std::string text;
  std::vector<std::size_t> counts;  // per mapping entry
  std::vector<std::string> warnings;
};

/// Simultaneous whole-word replacement in a single left-to-right pass,
/// longest source first. A source matches with its first letter in either
/// case; a capitalized occurrence gets a capitalized replacement.
/// Replacement text is never re-scanned. A source that contains another
/// source is an error.
SwapResult swap_entities(std::string_view document,
                         const std::vector<std::pair<std::string, std::string>>& mapping);

enum class AttackType { kOmission, kEntitySwap, kNegation };
std::string_view to_string(AttackType t);
AttackType parse_attack_type(std::string_view text);

struct AttackCase {
  std::string case_id;
  std::string source_doc_id;
  AttackType attack_type = AttackType::kOmission;
  nlohmann::json params;  // omission: {drop_fraction, seed}; entity_swap: {mapping}; negation: {description}
  std::string attacked_document;
};

AttackCase make_omission_case(const SummaryPair& pair, double fraction, std::uint64_t seed);
AttackCase make_swap_case(const SummaryPair& pair,
                          const std::vector<std::pair<std::string, std::string>>& mapping,
                          std::vector<std::string>* warnings = nullptr);

/// Reads attack cases JSONL; validates params per type, rejects duplicate
/// case ids and empty attacked documents.
std::vector<AttackCase> parse_attack_cases(std::istream& in, const std::string& source);
std::vector<AttackCase> load_attack_cases(const std::string& path);
void write_attack_cases(std::ostream& out, const std::vector<AttackCase>& cases);

enum class AttackTask { kCts, kClcts };
std::string_view to_string(AttackTask t);
AttackTask parse_attack_task(std::string_view text);

struct AttackJudgment {
  std::string case_id;
  AttackTask task = AttackTask::kCts;
  double temperature = 0;
  std::string annotator_id;
  bool success = false;
};

inline const std::vector<std::string> kJudgmentsHeader = {"case_id", "task", "temperature", "annotator_id",
                                                          "success"};

/// Reads judgments CSV. `success` accepts 1/0/true/false/yes/no. With
/// `strict_temperatures` a temperature outside {0, 0.7, 1} is rejected.
/// One judgment per (case, task, temperature, annotator).
std::vector<AttackJudgment> parse_judgments(std::istream& in, const std::string& source,
                                            bool strict_temperatures = true);
std::vector<AttackJudgment> load_judgments(const std::string& path, bool strict_temperatures = true);
void write_judgments(std::ostream& out, const std::vector<AttackJudgment>& judgments);

struct AccuracyCell {
  std::size_t successes = 0;
  std::size_t total = 0;
  double accuracy() const { return static_cast<double>(successes) / static_cast<double>(total); }
};

/// successes / judgments per (attack type, task); cells without judgments
/// are absent. Judgments for unknown cases are an error.
std::map<std::pair<AttackType, AttackTask>, AccuracyCell> attack_accuracy(
    const std::vector<AttackCase>& cases, const std::vector<AttackJudgment>& judgments);

/// Table layout: {"Entity swap": {"CTS": "0.80", "CLCTS": "0.53"}, ...}.
nlohmann::json accuracy_table(const std::map<std::pair<AttackType, AttackTask>, AccuracyCell>& cells);

/// Cohen's kappa between two annotators' success labels over the
/// (case, task, temperature) items both judged.
KappaResult judgment_kappa(const std::vector<AttackJudgment>& judgments, const std::string& annotator_a,
                           const std::string& annotator_b);

// ---------------------------------------------------------------------------
// Similarity decay under sentence omission

/// score(candidate, reference) for one metric.
using DecayMetric = std::function<double(const std::string& candidate, const std::string& reference)>;

struct DecayDocument {
  std::string doc_id;
  std::map<double, std::string> summaries;  // drop fraction -> summary; 0 is the baseline
};

/// doc -> metric -> fraction -> raw score.
using DecaySeries = std::map<std::string, std::map<std::string, std::map<double, double>>>;

enum class DecayCi {
  kAcrossDocuments,
  kAcrossMetrics,
};

struct DecayPoint {
  double fraction = 0;
  double mean = 0;
  std::optional<double> ci_half_width;  // 1.96 * standard error; absent with fewer than 2 units
  std::size_t units = 0;                // documents or metrics behind the CI
};

struct DecayCurve {
  std::vector<DecayPoint> points;
  std::vector<std::string> warnings;
};

/// Scores every summary against the document's fraction-0 summary.
DecaySeries decay_scores(const std::vector<DecayDocument>& documents,
                         const std::vector<std::pair<std::string, DecayMetric>>& metrics);

/// Min-max scales each (document, metric) series to [0, 1], averages over
/// metrics and then over documents. A constant series is skipped with a
/// warning.
DecayCurve decay_curve(const DecaySeries& series, DecayCi ci = DecayCi::kAcrossDocuments);

nlohmann::json decay_report(const DecayCurve& curve, DecayCi ci);

}  // namespace clcts
