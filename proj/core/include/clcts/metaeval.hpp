#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "clcts/corpus.hpp"

namespace clcts {

struct CorrelationResult {
  double rho = 0;
  std::size_t n = 0;
  double p_value = 1;
  int stars = 0;
};

/// 3 for p < 0.001, 2 for p < 0.01, 1 for p < 0.05, else 0.
int significance_stars(double p);
std::string stars_string(int stars);

/// Fractional ranks (1-based); ties receive the mean of the positions they
/// occupy.
std::vector<double> average_ranks(const std::vector<double>& values);

/// Pearson correlation; throws ValidationError on zero variance.
double pearson(const std::vector<double>& x, const std::vector<double>& y);

/// Two-tailed p-value of a correlation coefficient from Student's t with
/// n - 2 degrees of freedom. |rho| = 1 gives 0.
double correlation_p_value(double rho, std::size_t n);

/// Spearman rank correlation with average-rank ties. Requires equal
/// lengths, n >= 3 and non-constant inputs.
CorrelationResult spearman(const std::vector<double>& x, const std::vector<double>& y);

// ---------------------------------------------------------------------------
// Likert annotations

struct RaterPairAgreement {
  std::string rater_a;
  std::string rater_b;
  std::size_t common_items = 0;
  double rho = 0;
};

struct AgreementResult {
  double mean_rho = 0;
  std::vector<RaterPairAgreement> pairs;  // pairs that contributed
  std::size_t skipped_insufficient_overlap = 0;  // fewer than 3 common items
  std::size_t skipped_zero_variance = 0;         // a rater constant on the common items
};

/// Mean pairwise Spearman rho between raters, each pair on its own common
/// (doc, system) items. Only records of `kind` are considered. Throws when
/// no pair has at least 3 common items with variance on both sides.
AgreementResult interannotator_agreement(const std::vector<AnnotationRecord>& records, Dimension dimension,
                                         RaterKind kind = RaterKind::kHuman);

struct MeanCell {
  double mean = 0;
  std::size_t count = 0;
};

/// system -> rater kind -> unweighted mean rating for `dimension`.
using RatingMeans = std::map<std::string, std::map<RaterKind, MeanCell>>;
RatingMeans rating_means(const std::vector<AnnotationRecord>& records, Dimension dimension);

/// "human/llm" with two decimals, "-" for a missing side: "4.35/3.30".
std::string format_rating_pair(const std::optional<double>& human, const std::optional<double>& llm);

/// Rows of system -> dimension -> "human/llm" cell, plus numeric detail.
nlohmann::json rating_table(const std::vector<AnnotationRecord>& records);

/// Spearman correlation between the per-item mean human rating and the
/// per-item mean LLM rating over items rated by both.
CorrelationResult human_llm_agreement(const std::vector<AnnotationRecord>& records, Dimension dimension);

enum class HumanAggregation {
  kMeanOverRaters,  // one data point per item: the mean of its ratings
  kPooled,          // one data point per (item, rater)
};

struct MetricCorrelations {
  std::map<std::string, CorrelationResult> by_metric;
  std::vector<std::string> warnings;  // metrics omitted for lack of data
};

/// Segment-level correlation of every metric with the `kind` ratings, joined
/// on (doc_id, system_id). Metrics with fewer than 3 joined items, or with
/// constant values, are omitted with a warning.
MetricCorrelations metric_human_correlation(const MetricScoreTable& scores,
                                            const std::vector<AnnotationRecord>& records,
                                            Dimension dimension,
                                            HumanAggregation aggregation = HumanAggregation::kMeanOverRaters,
                                            RaterKind kind = RaterKind::kHuman);

/// Correlation matrix for several dimensions as JSON and CSV
/// (metric,dimension,rho,n,p,stars).
nlohmann::json correlation_json(const std::map<Dimension, MetricCorrelations>& matrix);
void write_correlation_csv(std::ostream& out, const std::map<Dimension, MetricCorrelations>& matrix);

struct KappaResult {
  std::optional<double> kappa;  // empty when p_e = 1
  double observed = 0;          // raw agreement p_o
  double expected = 0;          // chance agreement p_e
  std::size_t n = 0;
};

/// Cohen's kappa for two label sequences of equal, non-zero length.
KappaResult cohens_kappa(const std::vector<std::string>& a, const std::vector<std::string>& b);

}  // namespace clcts
