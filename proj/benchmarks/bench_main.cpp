#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "clcts/metaeval.hpp"
#include "clcts/metrics.hpp"
#include "clcts/regression.hpp"
#include "clcts/semdiv.hpp"
#include "clcts/textstats.hpp"

using namespace clcts;

namespace {

std::vector<std::string> words(std::size_t n, std::size_t vocab, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::string> out(n);
  for (auto& w : out) w = "w" + std::to_string(rng() % vocab);
  return out;
}

std::string prose(std::size_t n, std::uint64_t seed) {
  std::string text;
  std::size_t i = 0;
  for (const auto& w : words(n, 4000, seed)) text += w + (++i % 17 == 0 ? ". " : " ");
  return text;
}

}  // namespace

static void BM_RougeL(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = words(n, 500, 1), b = words(n / 4, 500, 2);
  for (auto _ : state) benchmark::DoNotOptimize(rougeL(b, a));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_RougeL)->RangeMultiplier(4)->Range(256, 16384)->Complexity(benchmark::oNSquared);

static void BM_Rouge1(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = words(n, 500, 1), b = words(n / 4, 500, 2);
  for (auto _ : state) benchmark::DoNotOptimize(rouge1(b, a));
}
BENCHMARK(BM_Rouge1)->Range(256, 16384);

static void BM_Tokenize(benchmark::State& state) {
  const auto text = prose(static_cast<std::size_t>(state.range(0)), 3);
  const TokenizationPolicy policy;
  for (auto _ : state) benchmark::DoNotOptimize(tokenize(text, "de", policy));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_Tokenize)->Range(1024, 65536);

static void BM_SplitSentences(benchmark::State& state) {
  const auto text = prose(static_cast<std::size_t>(state.range(0)), 4);
  for (auto _ : state) benchmark::DoNotOptimize(split_sentences(text, "de"));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_SplitSentences)->Range(1024, 65536);

static void BM_Spearman(benchmark::State& state) {
  std::mt19937_64 rng(5);
  std::vector<double> x(static_cast<std::size_t>(state.range(0))), y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = static_cast<double>(rng() % 100);
    y[i] = x[i] + static_cast<double>(rng() % 50);
  }
  for (auto _ : state) benchmark::DoNotOptimize(spearman(x, y));
}
BENCHMARK(BM_Spearman)->Range(64, 8192);

static void BM_Ols(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g;
  Matrix x(n, 8);
  std::vector<double> y(n);
  for (std::size_t r = 0; r < n; ++r) {
    x(r, 0) = 1;
    for (std::size_t c = 1; c < 8; ++c) x(r, c) = g(rng);
    y[r] = x(r, 1) - 0.5 * x(r, 2) + g(rng);
  }
  for (auto _ : state) benchmark::DoNotOptimize(ols_fit(x, y));
}
BENCHMARK(BM_Ols)->Range(64, 4096);

static void BM_MeanPairwiseCosine(benchmark::State& state) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  auto set = [&](std::size_t n) {
    std::vector<std::vector<double>> v(n, std::vector<double>(768));
    for (auto& row : v)
      for (auto& e : row) e = g(rng);
    return v;
  };
  const auto doc = set(static_cast<std::size_t>(state.range(0))), summ = set(20);
  for (auto _ : state) benchmark::DoNotOptimize(mean_pairwise_cosine(doc, summ));
}
BENCHMARK(BM_MeanPairwiseCosine)->Range(16, 1024);
BENCHMARK_MAIN();
