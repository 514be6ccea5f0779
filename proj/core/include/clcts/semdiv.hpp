#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "clcts/corpus.hpp"

namespace clcts {

struct SimilarityReport {
  std::string model;  // embedding model id from the table header
  std::map<std::string, double> per_document;
  double corpus_mean = 0;
};

/// Cosine of two equal-length vectors; throws ValidationError on a zero
/// vector or a length mismatch.
double cosine(std::span<const double> a, std::span<const double> b);

/// Mean cosine over every (document sentence, summary sentence) pair.
double document_similarity(std::string_view doc_id, const EmbeddingTable& table);
double mean_pairwise_cosine(const std::vector<std::vector<double>>& left,
                            const std::vector<std::vector<double>>& right);

/// Per-document similarity for every pair of `corpus` and the unweighted
/// mean. Missing documents abort with the full list of missing ids.
SimilarityReport corpus_similarity(const Corpus& corpus, const EmbeddingTable& table,
                                   unsigned jobs = 1);

nlohmann::json similarity_report(const std::string& dataset, const SimilarityReport& report);

}  // namespace clcts
