#include "clcts/regression.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>

#include "clcts/csv.hpp"
#include "clcts/error.hpp"
#include "clcts/metaeval.hpp"

namespace clcts {
namespace {

Eigen::MatrixXd to_eigen(const Matrix& m) {
  Eigen::MatrixXd out(m.rows, m.cols);
  for (std::size_t r = 0; r < m.rows; ++r)
    for (std::size_t c = 0; c < m.cols; ++c) out(r, c) = m(r, c);
  return out;
}

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::string term_name(const std::vector<std::string>& terms, Eigen::Index j) {
  if (static_cast<std::size_t>(j) < terms.size()) return terms[j];
  return "x" + std::to_string(j);
}

// R² of y on the columns of x, where x already includes an intercept. Rank
// deficiency is tolerated.
double r_squared(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  const Eigen::VectorXd beta = qr.solve(y);
  const Eigen::VectorXd resid = y - x * beta;
  const double sse = resid.squaredNorm();
  const double sst = (y.array() - y.mean()).matrix().squaredNorm();
  return 1.0 - sse / sst;
}

}  // namespace

std::vector<double> Matrix::column(std::size_t c) const {
  std::vector<double> out(rows);
  for (std::size_t r = 0; r < rows; ++r) out[r] = (*this)(r, c);
  return out;
}

Standardized standardize(const std::vector<double>& values, SdKind kind) {
  if (values.size() < 2) throw ValidationError("standardize: need at least 2 values");
  for (double v : values)
    if (!std::isfinite(v)) throw ValidationError("standardize: non-finite value");
  const double n = static_cast<double>(values.size());
  Standardized s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.sd = std::sqrt(ss / (kind == SdKind::kSample ? n - 1 : n));
  if (s.sd == 0) throw ValidationError("standardize: constant input");
  s.z.reserve(values.size());
  for (double v : values) s.z.push_back((v - s.mean) / s.sd);
  return s;
}

std::string year_group(int year) {
  if (year < 1800) return "-1800";
  if (year <= 1850) return "1800-1850";
  return "1850+";
}

YearScheme year_scheme(Direction direction) {
  switch (direction) {
    case Direction::kHDeEn:
      return {{"1800-1850", "1850+"}, "1800-1850"};
    case Direction::kHEnDe:
      return {{"-1800", "1800-1850", "1850+"}, "-1800"};
    default:
      throw ValidationError("no year grouping defined for direction " + std::string(to_string(direction)));
  }
}

Design build_design(const std::vector<FeatureRow>& rows, const YearScheme& years, const std::string& base_model,
                    SdKind sd) {
  if (rows.empty()) throw ValidationError("design: no rows");
  std::set<std::string> present_years, models;
  for (const auto& r : rows) {
    if (std::find(years.levels.begin(), years.levels.end(), r.year_group) == years.levels.end())
      throw ValidationError("row (" + r.doc_id + ", " + r.model_id + "): year group '" + r.year_group +
                            "' is not one of the declared levels");
    present_years.insert(r.year_group);
    models.insert(r.model_id);
  }
  if (!present_years.count(years.base))
    throw ValidationError("base year group '" + years.base + "' has no rows");
  if (present_years.size() < 2)
    throw ValidationError("all rows fall into year group '" + years.base + "'; the year term cannot be estimated");
  if (!models.count(base_model)) throw ValidationError("base model '" + base_model + "' has no rows");

  Design d;
  d.terms = {"Intercept", "Similarity", "Length", "MDD"};
  std::vector<std::string> year_levels, model_levels;
  for (const auto& g : years.levels)
    if (g != years.base && present_years.count(g)) year_levels.push_back(g);
  for (const auto& m : models)
    if (m != base_model) model_levels.push_back(m);
  for (const auto& g : year_levels) d.terms.push_back("Year:" + g);
  for (const auto& m : model_levels) d.terms.push_back("Model:" + m);

  auto numeric = [&](double FeatureRow::*field, const char* name) {
    std::vector<double> v;
    v.reserve(rows.size());
    for (const auto& r : rows) v.push_back(r.*field);
    try {
      return d.scaling[name] = standardize(v, sd);
    } catch (const ValidationError& e) {
      throw ValidationError(std::string(name) + ": " + e.what());
    }
  };
  const auto sim = numeric(&FeatureRow::similarity, "Similarity");
  const auto len = numeric(&FeatureRow::length, "Length");
  const auto mdd = numeric(&FeatureRow::mdd, "MDD");

  d.x = Matrix(rows.size(), d.terms.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    d.x(i, 0) = 1.0;
    d.x(i, 1) = sim.z[i];
    d.x(i, 2) = len.z[i];
    d.x(i, 3) = mdd.z[i];
    std::size_t c = 4;
    for (const auto& g : year_levels) d.x(i, c++) = rows[i].year_group == g ? 1.0 : 0.0;
    for (const auto& m : model_levels) d.x(i, c++) = rows[i].model_id == m ? 1.0 : 0.0;
  }
  return d;
}

const Coefficient& RegressionResult::at(const std::string& term) const {
  auto it = std::find(terms.begin(), terms.end(), term);
  if (it == terms.end()) throw ValidationError("no term '" + term + "' in the regression");
  return coefficients[static_cast<std::size_t>(it - terms.begin())];
}

RegressionResult ols_fit(const Matrix& xm, const std::vector<double>& yv, const std::vector<std::string>& terms) {
  if (xm.rows != yv.size()) throw ValidationError("ols: design has " + std::to_string(xm.rows) +
                                                  " rows but response has " + std::to_string(yv.size()));
  const std::size_t n = xm.rows, k = xm.cols;
  if (k == 0) throw ValidationError("ols: empty design");
  if (n <= k)
    throw ValidationError("ols: need more observations than columns (n=" + std::to_string(n) +
                          ", k=" + std::to_string(k) + ")");
  for (double v : yv)
    if (!std::isfinite(v)) throw ValidationError("ols: non-finite response");

  const Eigen::MatrixXd x = to_eigen(xm);
  const Eigen::VectorXd y = to_eigen(yv);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(1e-10);
  if (static_cast<std::size_t>(qr.rank()) < k) {
    std::string names;
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index j = qr.rank(); j < static_cast<Eigen::Index>(k); ++j)
      names += (names.empty() ? "" : ", ") + term_name(terms, perm[j]);
    throw ValidationError("ols: design is rank deficient (rank " + std::to_string(qr.rank()) + " of " +
                          std::to_string(k) + "); collinear column(s): " + names);
  }
  const Eigen::VectorXd beta = qr.solve(y);
  const Eigen::VectorXd fitted = x * beta;
  const Eigen::VectorXd resid = y - fitted;

  // (X'X)^-1 = P R^-1 R^-T P' for X P = Q R.
  const Eigen::MatrixXd r = qr.matrixR().topLeftCorner(k, k).template triangularView<Eigen::Upper>();
  const Eigen::MatrixXd r_inv =
      r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(k),
                                                                       static_cast<Eigen::Index>(k)));
  const Eigen::MatrixXd cov_perm = r_inv * r_inv.transpose();
  const auto& perm = qr.colsPermutation();
  const Eigen::MatrixXd xtx_inv = perm * cov_perm * perm.transpose();

  RegressionResult out;
  out.n = n;
  out.k = k;
  const double dof = static_cast<double>(n - k);
  const double sse = resid.squaredNorm();
  const double sst = (y.array() - y.mean()).matrix().squaredNorm();
  out.residual_variance = sse / dof;
  out.r2 = sst > 0 ? 1.0 - sse / sst : 0.0;
  out.adj_r2 = 1.0 - (1.0 - out.r2) * static_cast<double>(n - 1) / dof;
  boost::math::students_t dist(dof);
  for (std::size_t j = 0; j < k; ++j) {
    Coefficient c;
    c.beta = beta(static_cast<Eigen::Index>(j));
    c.std_err = std::sqrt(std::max(0.0, out.residual_variance * xtx_inv(j, j)));
    if (c.std_err > 0) {
      c.t = c.beta / c.std_err;
      c.p = 2 * boost::math::cdf(boost::math::complement(dist, std::abs(c.t)));
    } else {
      // Exact fit: a non-zero coefficient is certain, a zero one carries no evidence.
      c.t = c.beta == 0 ? 0 : std::copysign(std::numeric_limits<double>::infinity(), c.beta);
      c.p = c.beta == 0 ? 1 : 0;
    }
    c.stars = significance_stars(c.p);
    out.coefficients.push_back(c);
    out.terms.push_back(term_name(terms, static_cast<Eigen::Index>(j)));
  }
  out.fitted.assign(fitted.data(), fitted.data() + fitted.size());
  out.residuals.assign(resid.data(), resid.data() + resid.size());
  return out;
}

std::map<std::string, double> vif(const std::vector<std::vector<double>>& columns,
                                  const std::vector<std::string>& names) {
  if (columns.size() != names.size()) throw ValidationError("vif: names and columns differ in count");
  if (columns.size() < 2) throw ValidationError("vif: need at least two features");
  const std::size_t n = columns.front().size();
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (columns[j].size() != n) throw ValidationError("vif: columns differ in length");
    if (std::adjacent_find(columns[j].begin(), columns[j].end(), std::not_equal_to<>()) == columns[j].end())
      throw ValidationError("vif: feature '" + names[j] + "' is constant");
  }
  if (n <= columns.size()) throw ValidationError("vif: need more observations than features");

  std::map<std::string, double> out;
  const auto p = static_cast<Eigen::Index>(columns.size());
  for (Eigen::Index j = 0; j < p; ++j) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), p);
    x.col(0).setOnes();
    Eigen::Index c = 1;
    for (Eigen::Index o = 0; o < p; ++o)
      if (o != j) x.col(c++) = to_eigen(columns[o]);
    const double r2 = r_squared(x, to_eigen(columns[j]));
    out[names[j]] = r2 >= 1.0 - 1e-12 ? std::numeric_limits<double>::infinity() : 1.0 / (1.0 - r2);
  }
  return out;
}

FeatureModelResult fit_feature_model(const std::vector<FeatureRow>& rows, Direction direction, const FeatureModelOptions& options) {
  if (rows.empty()) throw ValidationError("regression: no feature rows");
  FeatureModelResult result;
  YearScheme years = year_scheme(direction);
  if (!options.base_year.empty()) {
    if (std::find(years.levels.begin(), years.levels.end(), options.base_year) == years.levels.end())
      throw ValidationError("base year group '" + options.base_year + "' is not a level of " +
                            std::string(to_string(direction)));
    years.base = options.base_year;
  }
  result.base_year = years.base;
  if (options.base_model.empty()) {
    result.base_model = rows.front().model_id;
    for (const auto& r : rows) result.base_model = std::min(result.base_model, r.model_id);
  } else {
    result.base_model = options.base_model;
  }
  result.design = build_design(rows, years, result.base_model, options.sd);

  std::vector<double> y;
  y.reserve(rows.size());
  for (const auto& r : rows) y.push_back(r.y);
  if (options.standardize_response) {
    const bool constant = std::adjacent_find(y.begin(), y.end(), std::not_equal_to<>()) == y.end();
    if (constant) {
      for (double& v : y) v = 0;
      result.notes.push_back("response is constant; centered but not scaled");
    } else {
      y = standardize(y, options.sd).z;
    }
  }
  result.fit = ols_fit(result.design.x, y, result.design.terms);
  result.vif = vif({result.design.x.column(1), result.design.x.column(2), result.design.x.column(3)},
                   {"Similarity", "Length", "MDD"});
  return result;
}

std::string format_coefficient(const Coefficient& c) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", c.beta);
  std::string s = buf;
  if (s == "-0.00") s = "0.00";
  return s + stars_string(c.stars);
}

nlohmann::json regression_report(const FeatureModelResult& result, Direction direction) {
  const auto& fit = result.fit;
  nlohmann::json terms = nlohmann::json::object();
  nlohmann::json table = nlohmann::json::object();
  for (std::size_t j = 0; j < fit.terms.size(); ++j) {
    const auto& c = fit.coefficients[j];
    terms[fit.terms[j]] = {{"beta", c.beta}, {"std_err", c.std_err}, {"t", c.t},
                           {"p", c.p},       {"stars", c.stars},     {"cell", format_coefficient(c)}};
    table[fit.terms[j]] = format_coefficient(c);
  }
  table["Year:" + result.base_year] = "base";
  table["Model:" + result.base_model] = "base";
  nlohmann::json vif_json = nlohmann::json::object();
  for (const auto& [name, v] : result.vif) vif_json[name] = std::isfinite(v) ? nlohmann::json(v) : nlohmann::json("inf");
  nlohmann::json scaling = nlohmann::json::object();
  for (const auto& [name, s] : result.design.scaling) scaling[name] = {{"mean", s.mean}, {"sd", s.sd}};
  return {{"direction", to_string(direction)},
          {"n", fit.n},
          {"k", fit.k},
          {"r2", fit.r2},
          {"adj_r2", fit.adj_r2},
          {"residual_variance", fit.residual_variance},
          {"sigma", std::sqrt(fit.residual_variance)},
          {"base_year_group", result.base_year},
          {"base_model", result.base_model},
          {"terms", terms},
          {"table", table},
          {"vif", vif_json},
          {"scaling", scaling},
          {"notes", result.notes}};
}

std::vector<FeatureRow> parse_features(std::istream& in, const std::string& source) {
  auto records = csv::parse(in, source);
  if (records.empty() || records.front().fields != kFeatureHeader)
    throw ValidationError(source + ": expected header 'doc_id,model_id,similarity,length,mdd,year_group,bertscore_f1'");
  std::vector<FeatureRow> rows;
  std::set<std::pair<std::string, std::string>> seen;
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.fields.size() != kFeatureHeader.size())
      throw ValidationError(at_line(source, r.line, "expected 7 fields, got " + std::to_string(r.fields.size())));
    FeatureRow row;
    try {
      row.doc_id = r.fields[0];
      row.model_id = r.fields[1];
      row.similarity = parse_double(r.fields[2], "similarity");
      row.length = parse_double(r.fields[3], "length");
      row.mdd = parse_double(r.fields[4], "mdd");
      row.year_group = r.fields[5];
      row.y = parse_double(r.fields[6], "bertscore_f1");
    } catch (const ValidationError& e) {
      throw ValidationError(at_line(source, r.line, e.what()));
    }
    if (row.year_group != "-1800" && row.year_group != "1800-1850" && row.year_group != "1850+")
      throw ValidationError(at_line(source, r.line, "unknown year group '" + row.year_group + "'"));
    for (double v : {row.similarity, row.length, row.mdd, row.y})
      if (!std::isfinite(v)) throw ValidationError(at_line(source, r.line, "non-finite feature"));
    if (!seen.insert({row.doc_id, row.model_id}).second)
      throw ValidationError(at_line(source, r.line, "duplicate row (" + row.doc_id + ", " + row.model_id + ")"));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<FeatureRow> load_features(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  return parse_features(in, path);
}

void write_features(std::ostream& out, const std::vector<FeatureRow>& rows) {
  csv::write_row(out, kFeatureHeader);
  for (const auto& r : rows)
    csv::write_row(out, {r.doc_id, r.model_id, format_double(r.similarity), format_double(r.length),
                         format_double(r.mdd), r.year_group, format_double(r.y)});
}

std::vector<FeatureRow> assemble_features(const Corpus& corpus, const FeatureSources& sources,
                                          const MetricScoreTable& scores, const std::string& response_metric) {
  std::vector<FeatureRow> rows;
  std::vector<std::string> problems;
  for (const auto& score : scores.rows()) {
    if (score.metric_name != response_metric) continue;
    const auto* pair = corpus.find(score.doc_id);
    if (pair == nullptr) {
      problems.push_back(score.doc_id + "/" + score.system_id + " (document not in corpus)");
      continue;
    }
    std::vector<std::string> missing;
    auto lookup = [&](const std::map<std::string, double>& m, const char* name) {
      auto it = m.find(score.doc_id);
      if (it == m.end()) {
        missing.emplace_back(name);
        return 0.0;
      }
      return it->second;
    };
    FeatureRow row{score.doc_id, score.system_id, lookup(sources.similarity, "similarity"),
                   lookup(sources.length, "length"), lookup(sources.mdd, "mdd"), year_group(pair->year),
                   score.value};
    if (!missing.empty()) {
      std::string list;
      for (const auto& m : missing) list += (list.empty() ? "" : ",") + m;
      problems.push_back(score.doc_id + "/" + score.system_id + " (missing " + list + ")");
      continue;
    }
    rows.push_back(std::move(row));
  }
  if (!problems.empty()) {
    std::string list;
    for (const auto& p : problems) list += "\n  " + p;
    throw ValidationError(std::to_string(problems.size()) + " feature row(s) incomplete:" + list);
  }
  if (rows.empty()) throw ValidationError("no " + response_metric + " scores to regress on");
  return rows;
}

}  // namespace clcts
