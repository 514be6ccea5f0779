#include "clcts/metaeval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <set>

#include <boost/math/distributions/students_t.hpp>

#include "clcts/csv.hpp"
#include "clcts/error.hpp"

namespace clcts {

int significance_stars(double p) {
  if (p < 0.001) return 3;
  if (p < 0.01) return 2;
  if (p < 0.05) return 1;
  return 0;
}

std::string stars_string(int stars) { return std::string(static_cast<std::size_t>(stars), '*'); }

std::vector<double> average_ranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    // positions i..j-1 (0-based) share the mean rank
    const double rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw ValidationError("correlation: length mismatch");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0 || syy == 0) throw ValidationError("correlation undefined: zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double correlation_p_value(double rho, std::size_t n) {
  if (n < 3) throw ValidationError("p-value needs at least 3 observations");
  if (std::abs(rho) >= 1.0) return 0.0;
  const double df = static_cast<double>(n - 2);
  const double t = rho * std::sqrt(df / (1 - rho * rho));
  boost::math::students_t dist(df);
  return std::min(1.0, 2 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
}

CorrelationResult spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size())
    throw ValidationError("spearman: length mismatch (" + std::to_string(x.size()) + " vs " +
                          std::to_string(y.size()) + ")");
  if (x.size() < 3) throw ValidationError("spearman: need at least 3 observations");
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw ValidationError("spearman: non-finite value");
  CorrelationResult r;
  r.n = x.size();
  r.rho = pearson(average_ranks(x), average_ranks(y));
  r.p_value = correlation_p_value(r.rho, r.n);
  r.stars = significance_stars(r.p_value);
  return r;
}

namespace {

using Item = std::pair<std::string, std::string>;  // (doc_id, system_id)

}  // namespace

AgreementResult interannotator_agreement(const std::vector<AnnotationRecord>& records, Dimension dimension,
                                         RaterKind kind) {
  std::map<std::string, std::map<Item, double>> by_rater;
  for (const auto& r : records)
    if (r.rater_kind == kind) by_rater[r.rater_id][{r.doc_id, r.system_id}] = r.rating(dimension);
  if (by_rater.size() < 2) throw ValidationError("agreement needs at least two raters");

  AgreementResult result;
  double sum = 0;
  for (auto a = by_rater.begin(); a != by_rater.end(); ++a) {
    for (auto b = std::next(a); b != by_rater.end(); ++b) {
      std::vector<double> x, y;
      for (const auto& [item, v] : a->second) {
        auto it = b->second.find(item);
        if (it == b->second.end()) continue;
        x.push_back(v);
        y.push_back(it->second);
      }
      if (x.size() < 3) {
        ++result.skipped_insufficient_overlap;
        continue;
      }
      const bool constant = std::adjacent_find(x.begin(), x.end(), std::not_equal_to<>()) == x.end() ||
                            std::adjacent_find(y.begin(), y.end(), std::not_equal_to<>()) == y.end();
      if (constant) {
        ++result.skipped_zero_variance;
        continue;
      }
      const double rho = spearman(x, y).rho;
      result.pairs.push_back({a->first, b->first, x.size(), rho});
      sum += rho;
    }
  }
  if (result.pairs.empty())
    throw ValidationError("no rater pair shares at least 3 items with varying ratings");
  result.mean_rho = sum / static_cast<double>(result.pairs.size());
  return result;
}

RatingMeans rating_means(const std::vector<AnnotationRecord>& records, Dimension dimension) {
  std::map<std::string, std::map<RaterKind, std::pair<double, std::size_t>>> sums;
  for (const auto& r : records) {
    auto& cell = sums[r.system_id][r.rater_kind];
    cell.first += r.rating(dimension);
    ++cell.second;
  }
  RatingMeans out;
  for (const auto& [system, kinds] : sums)
    for (const auto& [kind, cell] : kinds)
      out[system][kind] = {cell.first / static_cast<double>(cell.second), cell.second};
  return out;
}

std::string format_rating_pair(const std::optional<double>& human, const std::optional<double>& llm) {
  auto fmt = [](const std::optional<double>& v) -> std::string {
    if (!v) return "-";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", *v);
    return buf;
  };
  return fmt(human) + "/" + fmt(llm);
}

nlohmann::json rating_table(const std::vector<AnnotationRecord>& records) {
  nlohmann::json rows = nlohmann::json::object();
  for (Dimension d : kAllDimensions) {
    for (const auto& [system, kinds] : rating_means(records, d)) {
      std::optional<double> human, llm;
      if (auto it = kinds.find(RaterKind::kHuman); it != kinds.end()) human = it->second.mean;
      if (auto it = kinds.find(RaterKind::kLlm); it != kinds.end()) llm = it->second.mean;
      auto& row = rows[system];
      row[std::string(to_string(d))] = format_rating_pair(human, llm);
      auto& detail = row["detail"][std::string(to_string(d))];
      detail["human"] = human ? nlohmann::json(*human) : nlohmann::json(nullptr);
      detail["llm"] = llm ? nlohmann::json(*llm) : nlohmann::json(nullptr);
    }
  }
  return rows;
}

namespace {

std::map<Item, double> mean_per_item(const std::vector<AnnotationRecord>& records, Dimension dimension,
                                     RaterKind kind) {
  std::map<Item, std::pair<double, std::size_t>> sums;
  for (const auto& r : records) {
    if (r.rater_kind != kind) continue;
    auto& s = sums[{r.doc_id, r.system_id}];
    s.first += r.rating(dimension);
    ++s.second;
  }
  std::map<Item, double> out;
  for (const auto& [item, s] : sums) out[item] = s.first / static_cast<double>(s.second);
  return out;
}

bool is_constant(const std::vector<double>& v) {
  return std::adjacent_find(v.begin(), v.end(), std::not_equal_to<>()) == v.end();
}

}  // namespace

CorrelationResult human_llm_agreement(const std::vector<AnnotationRecord>& records, Dimension dimension) {
  const auto human = mean_per_item(records, dimension, RaterKind::kHuman);
  const auto llm = mean_per_item(records, dimension, RaterKind::kLlm);
  std::vector<double> x, y;
  for (const auto& [item, h] : human) {
    auto it = llm.find(item);
    if (it == llm.end()) continue;
    x.push_back(h);
    y.push_back(it->second);
  }
  return spearman(x, y);
}

MetricCorrelations metric_human_correlation(const MetricScoreTable& scores,
                                            const std::vector<AnnotationRecord>& records,
                                            Dimension dimension, HumanAggregation aggregation,
                                            RaterKind kind) {
  MetricCorrelations out;
  const auto means = mean_per_item(records, dimension, kind);
  for (const auto& metric : scores.metrics()) {
    std::vector<double> m, h;
    std::set<Item> items;
    if (aggregation == HumanAggregation::kMeanOverRaters) {
      for (const auto& [item, rating] : means) {
        auto v = scores.find(item.first, item.second, metric);
        if (!v) continue;
        m.push_back(*v);
        h.push_back(rating);
        items.insert(item);
      }
    } else {
      for (const auto& r : records) {
        if (r.rater_kind != kind) continue;
        auto v = scores.find(r.doc_id, r.system_id, metric);
        if (!v) continue;
        m.push_back(*v);
        h.push_back(r.rating(dimension));
        items.insert({r.doc_id, r.system_id});
      }
    }
    if (items.size() < 3) {
      out.warnings.push_back(metric + ": only " + std::to_string(items.size()) +
                             " item(s) with both a score and a rating; omitted");
      continue;
    }
    if (is_constant(m) || is_constant(h)) {
      out.warnings.push_back(metric + ": constant values on the joined items; omitted");
      continue;
    }
    out.by_metric[metric] = spearman(m, h);
  }
  return out;
}

nlohmann::json correlation_json(const std::map<Dimension, MetricCorrelations>& matrix) {
  nlohmann::json out = nlohmann::json::object();
  nlohmann::json warnings = nlohmann::json::array();
  for (const auto& [dim, corr] : matrix) {
    const std::string d(to_string(dim));
    for (const auto& [metric, r] : corr.by_metric)
      out["correlations"][metric][d] = {
          {"rho", r.rho}, {"n", r.n}, {"p", r.p_value}, {"stars", r.stars}, {"label", stars_string(r.stars)}};
    for (const auto& w : corr.warnings) warnings.push_back(d + ": " + w);
  }
  if (!out.contains("correlations")) out["correlations"] = nlohmann::json::object();
  out["warnings"] = warnings;
  return out;
}

void write_correlation_csv(std::ostream& out, const std::map<Dimension, MetricCorrelations>& matrix) {
  csv::write_row(out, {"metric", "dimension", "rho", "n", "p", "stars"});
  std::map<std::string, std::map<Dimension, CorrelationResult>> by_metric;
  for (const auto& [dim, corr] : matrix)
    for (const auto& [metric, r] : corr.by_metric) by_metric[metric][dim] = r;
  for (const auto& [metric, dims] : by_metric)
    for (const auto& [dim, r] : dims)
      csv::write_row(out, {metric, std::string(to_string(dim)), format_double(r.rho), std::to_string(r.n),
                           format_double(r.p_value), std::to_string(r.stars)});
}

KappaResult cohens_kappa(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  if (a.size() != b.size()) throw ValidationError("kappa: label sequences differ in length");
  if (a.empty()) throw ValidationError("kappa: no labels");
  std::map<std::string, std::pair<double, double>> marginals;
  std::size_t agree = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++marginals[a[i]].first;
    ++marginals[b[i]].second;
    agree += a[i] == b[i];
  }
  const double n = static_cast<double>(a.size());
  KappaResult k;
  k.n = a.size();
  k.observed = static_cast<double>(agree) / n;
  for (const auto& [label, m] : marginals) k.expected += (m.first / n) * (m.second / n);
  if (k.expected < 1.0) k.kappa = (k.observed - k.expected) / (1.0 - k.expected);
  return k;
}

}  // namespace clcts
