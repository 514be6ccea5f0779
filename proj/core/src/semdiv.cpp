#include "clcts/semdiv.hpp"

#include <algorithm>
#include <cmath>

#include "clcts/error.hpp"
#include "clcts/parallel.hpp"

namespace clcts {

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw ValidationError("cosine: dimension mismatch (" + std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()) + ")");
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0 || nb == 0) throw ValidationError("cosine undefined for a zero vector");
  const double c = dot / (std::sqrt(na) * std::sqrt(nb));
  return std::clamp(c, -1.0, 1.0);
}

double mean_pairwise_cosine(const std::vector<std::vector<double>>& left,
                            const std::vector<std::vector<double>>& right) {
  if (left.empty() || right.empty()) throw ValidationError("no sentence vectors on one side");
  double sum = 0;
  for (const auto& l : left)
    for (const auto& r : right) sum += cosine(l, r);
  return sum / static_cast<double>(left.size() * right.size());
}

double document_similarity(std::string_view doc_id, const EmbeddingTable& table) {
  const auto* emb = table.find(doc_id);
  if (emb == nullptr) throw ValidationError("no embeddings for document '" + std::string(doc_id) + "'");
  if (emb->document.empty())
    throw ValidationError("document '" + std::string(doc_id) + "' has no document-side vectors");
  if (emb->summary.empty())
    throw ValidationError("document '" + std::string(doc_id) + "' has no summary-side vectors");
  try {
    return mean_pairwise_cosine(emb->document, emb->summary);
  } catch (const ValidationError& e) {
    throw ValidationError("document '" + std::string(doc_id) + "': " + e.what());
  }
}

SimilarityReport corpus_similarity(const Corpus& corpus, const EmbeddingTable& table, unsigned jobs) {
  std::vector<std::string> missing;
  for (const auto& p : corpus.pairs())
    if (table.find(p.id) == nullptr) missing.push_back(p.id);
  if (!missing.empty()) {
    std::string list;
    for (const auto& id : missing) list += (list.empty() ? "" : ", ") + id;
    throw ValidationError("missing embeddings for " + std::to_string(missing.size()) +
                          " document(s): " + list);
  }
  const auto& pairs = corpus.pairs();
  std::vector<double> values(pairs.size());
  parallel_for(pairs.size(), jobs, [&](std::size_t i) { values[i] = document_similarity(pairs[i].id, table); });

  SimilarityReport report;
  report.model = table.model();
  double sum = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    report.per_document[pairs[i].id] = values[i];
    sum += values[i];
  }
  report.corpus_mean = sum / static_cast<double>(pairs.size());
  return report;
}

nlohmann::json similarity_report(const std::string& dataset, const SimilarityReport& report) {
  nlohmann::json per_doc = nlohmann::json::object();
  for (const auto& [id, v] : report.per_document) per_doc[id] = v;
  return {{dataset,
           {{"corpus_mean", report.corpus_mean},
            {"documents", report.per_document.size()},
            {"embedding_model", report.model},
            {"per_document", per_doc}}}};
}

}  // namespace clcts
