#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "clcts/corpus.hpp"
#include "clcts/textstats.hpp"

namespace clcts {

struct RougeScore {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

/// Harmonic mean, 0 when both are 0.
double f1_score(double precision, double recall);

/// Unigram overlap with clipped counts. Throws on an empty reference; an
/// empty candidate scores 0.
RougeScore rouge1(const std::vector<std::string>& candidate, const std::vector<std::string>& reference);

/// Longest common subsequence length over the full sequences (O(nm) time,
/// O(min(n,m)) memory).
std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b);

/// Summary-level ROUGE-L over the full token sequences.
RougeScore rougeL(const std::vector<std::string>& candidate, const std::vector<std::string>& reference);

/// w * nli_d + (1 - w) * bertscore_f1. Throws if w is outside [0, 1] or an
/// input is not finite.
double menli_combine(double nli_d, double bertscore_f1, double w);

/// The study's MENLI weights and their metric names.
inline const std::vector<std::pair<std::string, double>> kMenliWeights = {
    {"MENLI-W1", 1.0}, {"MENLI-W.8", 0.8}, {"MENLI-W.3", 0.3}, {"MENLI-W.2", 0.2}};
inline constexpr const char* kNliMetric = "NLI-D";
inline constexpr const char* kBertScoreMetric = "BERTScore-F1";

/// Candidate summary keyed by (doc_id, system_id).
using CandidateMap = std::map<std::pair<std::string, std::string>, std::string>;

/// Reads {"doc_id", "system_id", "summary"} JSONL; duplicate keys are errors.
CandidateMap parse_candidates(std::istream& in, const std::string& source);
CandidateMap load_candidates(const std::string& path);

/// Adds the rows of `from` to `into`. Identical duplicates are ignored;
/// a duplicate key with a different value is a conflict error.
void merge_scores(MetricScoreTable& into, const MetricScoreTable& from);

/// Config string stamped into native ROUGE rows.
std::string rouge_config(const TokenizationPolicy& policy);

/// Native ROUGE-1/ROUGE-L precision/recall/F1 rows for every candidate
/// against the corpus summary, merged with the ingested rows, plus derived
/// MENLI-W rows for every key holding both NLI-D and BERTScore-F1.
MetricScoreTable score_systems(const Corpus& corpus, const CandidateMap& candidates,
                               const MetricScoreTable& ingested,
                               const TokenizationPolicy& policy = {}, unsigned jobs = 1);

}  // namespace clcts
