#include "clcts/metrics.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "clcts/error.hpp"
#include "clcts/parallel.hpp"

namespace clcts {

double f1_score(double precision, double recall) {
  if (precision + recall == 0) return 0;
  return 2 * precision * recall / (precision + recall);
}

namespace {

RougeScore make_score(double overlap, std::size_t cand, std::size_t ref) {
  RougeScore s;
  s.precision = cand == 0 ? 0 : overlap / static_cast<double>(cand);
  s.recall = overlap / static_cast<double>(ref);
  s.f1 = f1_score(s.precision, s.recall);
  return s;
}

}  // namespace

RougeScore rouge1(const std::vector<std::string>& candidate, const std::vector<std::string>& reference) {
  if (reference.empty()) throw ValidationError("ROUGE: empty reference");
  std::unordered_map<std::string_view, std::size_t> ref_counts;
  for (const auto& t : reference) ++ref_counts[t];
  std::size_t overlap = 0;
  for (const auto& t : candidate) {
    auto it = ref_counts.find(t);
    if (it != ref_counts.end() && it->second > 0) {
      --it->second;
      ++overlap;
    }
  }
  return make_score(static_cast<double>(overlap), candidate.size(), reference.size());
}

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  const auto& outer = a.size() >= b.size() ? a : b;
  const auto& inner = a.size() >= b.size() ? b : a;
  std::vector<std::size_t> row(inner.size() + 1, 0);
  for (const auto& x : outer) {
    std::size_t diag = 0;  // row[j-1] from the previous outer step
    for (std::size_t j = 1; j <= inner.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = x == inner[j - 1] ? diag + 1 : std::max(row[j], row[j - 1]);
      diag = up;
    }
  }
  return row.back();
}

RougeScore rougeL(const std::vector<std::string>& candidate, const std::vector<std::string>& reference) {
  if (reference.empty()) throw ValidationError("ROUGE: empty reference");
  return make_score(static_cast<double>(lcs_length(candidate, reference)), candidate.size(),
                    reference.size());
}

double menli_combine(double nli_d, double bertscore_f1, double w) {
  if (!(w >= 0 && w <= 1)) throw ValidationError("MENLI weight must lie in [0, 1]");
  if (!std::isfinite(nli_d) || !std::isfinite(bertscore_f1))
    throw ValidationError("MENLI inputs must be finite");
  return w * nli_d + (1 - w) * bertscore_f1;
}

CandidateMap parse_candidates(std::istream& in, const std::string& source) {
  CandidateMap out;
  std::map<std::pair<std::string, std::string>, std::size_t> first_line;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(at_line(source, number, std::string("malformed JSON: ") + e.what()));
    }
    if (!j.is_object()) throw ValidationError(at_line(source, number, "expected a JSON object"));
    for (const char* key : {"doc_id", "system_id", "summary"})
      if (!j.contains(key) || !j[key].is_string())
        throw ValidationError(at_line(source, number, std::string("missing string field '") + key + "'"));
    for (const auto& [key, value] : j.items())
      if (key != "doc_id" && key != "system_id" && key != "summary")
        throw ValidationError(at_line(source, number, "unknown field '" + key + "'"));
    std::pair<std::string, std::string> key{j["doc_id"], j["system_id"]};
    if (auto it = first_line.find(key); it != first_line.end())
      throw ValidationError(at_line(source, number,
                                    "duplicate candidate (" + key.first + ", " + key.second +
                                        "), first seen on line " + std::to_string(it->second)));
    first_line[key] = number;
    out[key] = j["summary"].get<std::string>();
  }
  return out;
}

CandidateMap load_candidates(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  return parse_candidates(in, path);
}

void merge_scores(MetricScoreTable& into, const MetricScoreTable& from) {
  for (auto row : from.rows()) {
    if (const auto* existing = into.find_row(row.key())) {
      if (existing->value == row.value) continue;
      throw ValidationError("conflicting scores for (" + row.doc_id + ", " + row.system_id + ", " +
                            row.metric_name + "): " + format_double(existing->value) + " vs " +
                            format_double(row.value));
    }
    into.insert(std::move(row));
  }
}

std::string rouge_config(const TokenizationPolicy& policy) {
  return "tokenizer=" + policy.id() + ";stemming=none;stopwords=kept;lcs=summary-level";
}

MetricScoreTable score_systems(const Corpus& corpus, const CandidateMap& candidates,
                               const MetricScoreTable& ingested, const TokenizationPolicy& policy,
                               unsigned jobs) {
  std::vector<std::pair<const std::pair<std::string, std::string>*, const std::string*>> items;
  for (const auto& [key, text] : candidates) {
    if (corpus.find(key.first) == nullptr)
      throw ValidationError("candidate for unknown document '" + key.first + "' (system '" +
                            key.second + "')");
    items.emplace_back(&key, &text);
  }

  std::vector<std::pair<RougeScore, RougeScore>> results(items.size());
  parallel_for(items.size(), jobs, [&](std::size_t i) {
    const auto* pair = corpus.find(items[i].first->first);
    const auto cand = tokenize(*items[i].second, pair->lang_tgt, policy);
    const auto ref = tokenize(pair->summary, pair->lang_tgt, policy);
    if (ref.empty())
      throw ValidationError("reference summary of '" + pair->id + "' has no tokens");
    results[i] = {rouge1(cand, ref), rougeL(cand, ref)};
  });

  MetricScoreTable table;
  const std::string config = rouge_config(policy);
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& [doc, system] = *items[i].first;
    auto add = [&](const std::string& name, double v) {
      table.insert({doc, system, name, v, Provenance::kNative, config});
    };
    const auto& [r1, rl] = results[i];
    add("ROUGE-1-P", r1.precision);
    add("ROUGE-1-R", r1.recall);
    add("ROUGE-1-F1", r1.f1);
    add("ROUGE-L-P", rl.precision);
    add("ROUGE-L-R", rl.recall);
    add("ROUGE-L-F1", rl.f1);
  }

  MetricScoreTable ingested_only;
  for (auto row : ingested.rows()) {
    if (row.provenance == Provenance::kDerived) continue;  // recomputed below
    ingested_only.insert(std::move(row));
  }
  merge_scores(table, ingested_only);

  std::vector<ScoreRow> derived;
  for (const auto& row : table.rows()) {
    if (row.metric_name != kNliMetric) continue;
    const auto bs = table.find(row.doc_id, row.system_id, kBertScoreMetric);
    if (!bs) continue;
    for (const auto& [name, w] : kMenliWeights)
      derived.push_back({row.doc_id, row.system_id, name, menli_combine(row.value, *bs, w),
                         Provenance::kDerived, "w=" + format_double(w)});
  }
  for (auto& row : derived) {
    if (const auto* existing = table.find_row(row.key())) {
      // An ingested MENLI row must agree with the recomputed value.
      if (std::abs(existing->value - row.value) > 1e-9)
        throw ValidationError("ingested " + row.metric_name + " for (" + row.doc_id + ", " +
                              row.system_id + ") disagrees with NLI-D/BERTScore-F1");
      continue;
    }
    table.insert(std::move(row));
  }
  return table;
}

}  // namespace clcts
