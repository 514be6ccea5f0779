#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "clcts/error.hpp"
#include "clcts/regression.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace clcts;

namespace {

std::vector<FeatureRow> synthetic_rows(std::mt19937_64& rng, std::size_t n, bool cross_years = true) {
  std::normal_distribution<double> g;
  const std::vector<std::string> models = {"m-a", "m-b", "m-c"};
  const std::vector<std::string> groups = {"1800-1850", "1850+"};
  std::vector<FeatureRow> rows;
  for (std::size_t i = 0; i < n; ++i) {
    FeatureRow r;
    r.doc_id = "d" + std::to_string(i / models.size());
    r.model_id = models[i % models.size()];
    r.similarity = 0.3 + 0.1 * g(rng);
    r.length = 1000 + 300 * g(rng);
    r.mdd = 2.5 + 0.4 * g(rng);
    r.year_group = cross_years ? groups[(i / models.size()) % 2] : groups[0];
    rows.push_back(r);
  }
  return rows;
}

std::vector<std::vector<double>> design_rows(const Matrix& x) {
  std::vector<std::vector<double>> out(x.rows, std::vector<double>(x.cols));
  for (std::size_t r = 0; r < x.rows; ++r)
    for (std::size_t c = 0; c < x.cols; ++c) out[r][c] = x(r, c);
  return out;
}

}  // namespace

TEST(YearGroup, Boundaries) {
  EXPECT_EQ(year_group(1799), "-1800");
  EXPECT_EQ(year_group(1800), "1800-1850");
  EXPECT_EQ(year_group(1850), "1800-1850");
  EXPECT_EQ(year_group(1851), "1850+");
  EXPECT_EQ(year_scheme(Direction::kHDeEn).base, "1800-1850");
  EXPECT_EQ(year_scheme(Direction::kHEnDe).levels.size(), 3u);
  EXPECT_THROW(year_scheme(Direction::kHDeDe), ValidationError);
}

TEST(Standardize, SampleAndPopulation) {
  const auto s = standardize({1, 2, 3, 4});
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_DOUBLE_EQ(s.sd, std::sqrt(5.0 / 3.0));
  EXPECT_DOUBLE_EQ(standardize({1, 2, 3, 4}, SdKind::kPopulation).sd, std::sqrt(1.25));
  EXPECT_THROW(standardize({1, 1}), ValidationError);
  EXPECT_THROW(standardize({1}), ValidationError);
}

TEST(Design, ColumnsAndErrors) {
  std::mt19937_64 rng(1);
  auto rows = synthetic_rows(rng, 12);
  const auto d = build_design(rows, year_scheme(Direction::kHDeEn), "m-a");
  EXPECT_EQ(d.terms, (std::vector<std::string>{"Intercept", "Similarity", "Length", "MDD", "Year:1850+",
                                               "Model:m-b", "Model:m-c"}));
  EXPECT_EQ(d.x.rows, 12u);
  EXPECT_THROW(build_design(rows, year_scheme(Direction::kHDeEn), "m-z"), ValidationError);
  rows[0].year_group = "-1800";
  EXPECT_THROW(build_design(rows, year_scheme(Direction::kHDeEn), "m-a"), ValidationError);
  auto flat = synthetic_rows(rng, 12, false);
  EXPECT_THROW(build_design(flat, year_scheme(Direction::kHDeEn), "m-a"), ValidationError);
}

TEST(Ols, RecoversNoiselessCoefficients) {
  std::mt19937_64 rng(42);
  auto rows = synthetic_rows(rng, 60);
  const std::vector<double> beta = {0.1, -0.5, 0.25, 0.75, -0.3, 0.2, 0.05};
  const auto d = build_design(rows, year_scheme(Direction::kHDeEn), "m-a");
  for (std::size_t r = 0; r < rows.size(); ++r) {
    double y = 0;
    for (std::size_t c = 0; c < beta.size(); ++c) y += beta[c] * d.x(r, c);
    rows[r].y = y;
  }
  FeatureModelOptions opts;
  opts.standardize_response = false;
  const auto res = fit_feature_model(rows, Direction::kHDeEn, opts);
  for (std::size_t c = 0; c < beta.size(); ++c) EXPECT_NEAR(res.fit.coefficients[c].beta, beta[c], 1e-6);
  EXPECT_NEAR(res.fit.adj_r2, 1.0, 1e-12);
}

TEST(Ols, MatchesNormalEquationsWithNoise) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> noise(0, 0.3);
  for (int trial = 0; trial < 20; ++trial) {
    auto rows = synthetic_rows(rng, 45);
    for (auto& r : rows) r.y = 0.8 + 0.5 * r.similarity - 0.0002 * r.length + noise(rng);
    const auto res = fit_feature_model(rows, Direction::kHDeEn);
    std::vector<double> y;
    for (const auto& r : rows) y.push_back(r.y);
    y = standardize(y).z;
    const auto expected = oracle::ols_normal_equations(design_rows(res.design.x), y);
    for (std::size_t c = 0; c < expected.size(); ++c)
      EXPECT_NEAR(res.fit.coefficients[c].beta, expected[c], 1e-8) << res.fit.terms[c];
    double sse = 0;
    for (double e : res.fit.residuals) sse += e * e;
    EXPECT_NEAR(res.fit.residual_variance, sse / static_cast<double>(res.fit.n - res.fit.k), 1e-12);
  }
}

TEST(Ols, StandardErrorsMatchTextbookSimpleRegression) {
  // y = a + b x: se(b) = sqrt(s^2 / Sxx)
  const std::vector<double> xs = {1, 2, 3, 4, 5, 6}, ys = {1.2, 1.9, 3.2, 3.8, 5.1, 6.3};
  Matrix x(6, 2);
  double mx = 3.5, sxx = 0;
  for (std::size_t i = 0; i < 6; ++i) {
    x(i, 0) = 1;
    x(i, 1) = xs[i];
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  const auto fit = ols_fit(x, ys, {"Intercept", "x"});
  EXPECT_NEAR(fit.at("x").std_err, std::sqrt(fit.residual_variance / sxx), 1e-12);
  EXPECT_NEAR(fit.at("x").t, fit.at("x").beta / fit.at("x").std_err, 1e-12);
}

TEST(Ols, RankDeficiencyNamesColumn) {
  Matrix x(5, 3);
  for (std::size_t i = 0; i < 5; ++i) {
    x(i, 0) = 1;
    x(i, 1) = static_cast<double>(i);
    x(i, 2) = 2.0 * static_cast<double>(i);
  }
  try {
    ols_fit(x, {1, 2, 3, 4, 6}, {"Intercept", "a", "twice_a"});
    FAIL();
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    EXPECT_TRUE(msg.ends_with(": twice_a") || msg.ends_with(": a")) << msg;
  }
}

TEST(Vif, ClosedFormCorrelationPointSix) {
  const std::vector<double> e1 = {0.5, -0.5, 0.5, -0.5}, e2 = {0.5, 0.5, -0.5, -0.5};
  std::vector<double> x2(4);
  for (int i = 0; i < 4; ++i) x2[i] = 0.6 * e1[i] + 0.8 * e2[i];
  const auto v = vif({e1, x2}, {"a", "b"});
  EXPECT_NEAR(v.at("a"), 1.5625, 1e-12);
  EXPECT_NEAR(v.at("b"), 1.5625, 1e-12);
  EXPECT_TRUE(std::isinf(vif({e1, e1}, {"a", "b"}).at("a")));
}

TEST(FeatureModel, BaseOverridesAndConstantResponse) {
  std::mt19937_64 rng(3);
  auto rows = synthetic_rows(rng, 30);
  for (auto& r : rows) r.y = 0.5;
  FeatureModelOptions opts;
  opts.base_model = "m-c";
  opts.base_year = "1850+";
  const auto res = fit_feature_model(rows, Direction::kHDeEn, opts);
  EXPECT_EQ(res.base_year, "1850+");
  EXPECT_EQ(res.base_model, "m-c");
  EXPECT_EQ(res.fit.terms[4], "Year:1800-1850");
  EXPECT_EQ(res.notes.size(), 1u);
  EXPECT_EQ(res.fit.r2, 0.0);
  opts.base_year = "-1800";
  EXPECT_THROW(fit_feature_model(rows, Direction::kHDeEn, opts), ValidationError);
}

TEST(FeatureModel, ReportFormatting) {
  Coefficient c;
  c.beta = -0.1449;
  c.stars = 3;
  EXPECT_EQ(format_coefficient(c), "-0.14***");
  c.beta = -0.001;
  c.stars = 0;
  EXPECT_EQ(format_coefficient(c), "0.00");
  std::mt19937_64 rng(5);
  auto rows = synthetic_rows(rng, 30);
  for (auto& r : rows) r.y = r.similarity + 0.01 * static_cast<double>(rng() % 7);
  const auto res = fit_feature_model(rows, Direction::kHDeEn);
  const auto report = regression_report(res, Direction::kHDeEn);
  EXPECT_TRUE(report.contains("table"));
  EXPECT_EQ(report["n"], 30);
}

TEST(Features, CsvRoundTripAndAssembly) {
  std::mt19937_64 rng(8);
  const auto rows = synthetic_rows(rng, 6);
  std::ostringstream out;
  write_features(out, rows);
  std::istringstream in(out.str());
  const auto again = parse_features(in, "f.csv");
  ASSERT_EQ(again.size(), rows.size());
  EXPECT_EQ(again[3].length, rows[3].length);
  EXPECT_EQ(again[3].year_group, rows[3].year_group);

  const auto corpus = load_corpus(testutil::fixture("mini_hde_en.jsonl"), Direction::kHDeEn);
  const auto scores = ingest_scores(testutil::fixture("mini_scores.csv"));
  FeatureSources src;
  for (const auto& p : corpus.pairs()) {
    src.similarity[p.id] = 0.3;
    src.length[p.id] = 100;
    src.mdd[p.id] = 2;
  }
  const auto assembled = assemble_features(corpus, src, scores);
  EXPECT_EQ(assembled.size(), 15u);
  EXPECT_EQ(assembled.front().year_group, year_group(corpus.find(assembled.front().doc_id)->year));
  src.mdd.erase("hde-002");
  try {
    assemble_features(corpus, src, scores);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("hde-002"), std::string::npos);
  }
}
