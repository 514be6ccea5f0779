#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "clcts/corpus.hpp"

namespace clcts {

/// Dense row-major matrix used at the API boundary.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::vector<double> column(std::size_t c) const;
};

enum class SdKind {
  kSample,      // divide by n - 1 (default)
  kPopulation,  // divide by n
};

struct Standardized {
  std::vector<double> z;
  double mean = 0;
  double sd = 0;
};

/// z = (v - mean) / sd. Requires n >= 2 and non-constant input.
Standardized standardize(const std::vector<double>& values, SdKind kind = SdKind::kSample);

struct FeatureRow {
  std::string doc_id;
  std::string model_id;
  double similarity = 0;
  double length = 0;
  double mdd = 0;
  std::string year_group;  // "-1800", "1800-1850" or "1850+"
  double y = 0;            // BERTScore-F1
};

/// "-1800" before 1800, "1800-1850" for 1800..1850 inclusive, "1850+" after.
std::string year_group(int year);

/// Declared year groups and base level of a direction: hDe-En uses
/// {1800-1850, 1850+} with base 1800-1850; hEn-De uses all three groups
/// with base -1800.
struct YearScheme {
  std::vector<std::string> levels;
  std::string base;
};
YearScheme year_scheme(Direction direction);

struct Design {
  Matrix x;
  std::vector<std::string> terms;  // "Intercept", "Similarity", "Length", "MDD", "Year:<g>", "Model:<m>"
  std::map<std::string, Standardized> scaling;  // numeric columns
};

/// Column order: Intercept, Similarity, Length, MDD, one Year:<level> per
/// non-base level in declared order, one Model:<id> per non-base model in
/// sorted order. Numeric columns are standardized.
Design build_design(const std::vector<FeatureRow>& rows, const YearScheme& years,
                    const std::string& base_model, SdKind sd = SdKind::kSample);

struct Coefficient {
  double beta = 0;
  double std_err = 0;
  double t = 0;
  double p = 1;
  int stars = 0;
};

struct RegressionResult {
  std::vector<std::string> terms;
  std::vector<Coefficient> coefficients;  // parallel to terms
  double r2 = 0;
  double adj_r2 = 0;
  double residual_variance = 0;  // sigma^2 estimate, SSE / (n - k)
  std::size_t n = 0;
  std::size_t k = 0;
  std::vector<double> fitted;
  std::vector<double> residuals;

  const Coefficient& at(const std::string& term) const;
};

/// Ordinary least squares via column-pivoted Householder QR. Requires
/// n > k and full column rank; a rank-deficient design names the columns
/// that could not be resolved.
RegressionResult ols_fit(const Matrix& x, const std::vector<double>& y,
                         const std::vector<std::string>& terms = {});

/// VIF_j = 1 / (1 - R²_j) from regressing column j on the others plus an
/// intercept. Perfect collinearity yields infinity.
std::map<std::string, double> vif(const std::vector<std::vector<double>>& columns,
                                  const std::vector<std::string>& names);

struct FeatureModelOptions {
  std::string base_model;  // empty: the first model id in sorted order
  std::string base_year;   // empty: the direction's default base level
  SdKind sd = SdKind::kSample;
  bool standardize_response = true;
};

struct FeatureModelResult {
  RegressionResult fit;
  Design design;
  std::string base_year;
  std::string base_model;
  std::map<std::string, double> vif;  // numeric features
  std::vector<std::string> notes;
};

/// Standardizes, builds the design and fits. A constant response is
/// centered rather than scaled.
FeatureModelResult fit_feature_model(const std::vector<FeatureRow>& rows, Direction direction, const FeatureModelOptions& options = {});

/// Report cell: coefficient with two decimals and stars, "-0.14***".
std::string format_coefficient(const Coefficient& c);

nlohmann::json regression_report(const FeatureModelResult& result, Direction direction);

inline const std::vector<std::string> kFeatureHeader = {"doc_id", "model_id", "similarity", "length",
                                                        "mdd",    "year_group", "bertscore_f1"};
std::vector<FeatureRow> parse_features(std::istream& in, const std::string& source);
std::vector<FeatureRow> load_features(const std::string& path);
void write_features(std::ostream& out, const std::vector<FeatureRow>& rows);

/// Feature rows for every (document, model) that has a BERTScore-F1 score.
/// Per-document inputs are keyed by doc_id; rows missing any feature are
/// collected into one error listing them.
struct FeatureSources {
  std::map<std::string, double> similarity;
  std::map<std::string, double> length;
  std::map<std::string, double> mdd;
};
std::vector<FeatureRow> assemble_features(const Corpus& corpus, const FeatureSources& sources,
                                          const MetricScoreTable& scores,
                                          const std::string& response_metric = "BERTScore-F1");

}  // namespace clcts
