#include "clcts/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>

#include "clcts/csv.hpp"
#include "clcts/error.hpp"
#include "clcts/textstats.hpp"
#include "clcts/unicode.hpp"

namespace clcts {

std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  if (bound == 0) throw ValidationError("uniform_below: empty range");
  // Reject the low (2^64 mod bound) values so the rest split evenly.
  const std::uint64_t threshold = (0 - bound) % bound;
  while (true) {
    const std::uint64_t r = rng();
    if (r >= threshold) return r % bound;
  }
}

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k > n) throw ValidationError("cannot sample " + std::to_string(k) + " of " + std::to_string(n));
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(uniform_below(rng, n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

OmissionResult omit_sentences(std::string_view document, double fraction, std::uint64_t seed,
                              std::string_view lang) {
  if (!(fraction >= 0 && fraction < 1)) throw ValidationError("drop fraction must lie in [0, 1)");
  const auto spans = sentence_spans(document, lang);
  if (spans.empty()) throw ValidationError("document has no sentences");
  OmissionResult out;
  out.sentence_count = spans.size();
  // The epsilon keeps products such as 0.3 * 10 = 2.9999999999999996 at 3.
  const auto k = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(spans.size()) + 1e-9));
  if (k >= spans.size()) throw ValidationError("omission would remove every sentence");
  if (k == 0) {
    out.text = std::string(document);
    return out;
  }
  out.dropped = sample_indices(spans.size(), k, seed);
  std::sort(out.dropped.begin(), out.dropped.end());

  std::vector<bool> drop(spans.size(), false);
  for (auto i : out.dropped) drop[i] = true;
  out.text.assign(document.substr(0, spans.front().begin));
  bool first = true;
  for (std::size_t i = 0; i < spans.size(); ++i) {
    if (drop[i]) continue;
    if (!first) out.text.append(document.substr(spans[i - 1].end, spans[i].begin - spans[i - 1].end));
    out.text.append(document.substr(spans[i].begin, spans[i].end - spans[i].begin));
    first = false;
  }
  out.text.append(document.substr(spans.back().end));
  return out;
}

std::vector<std::string> select_omission_candidates(const Corpus& corpus, std::size_t min_sents,
                                                    std::size_t max_sents) {
  if (min_sents > max_sents) throw ValidationError("min_sents exceeds max_sents");
  std::vector<std::string> out;
  for (const auto& p : corpus.pairs()) {
    const auto n = sentence_spans(p.document, p.lang_src).size();
    if (n >= min_sents && n <= max_sents) out.push_back(p.id);
  }
  return out;
}

std::vector<std::string> sample_documents(const std::vector<std::string>& ids, std::size_t k, std::uint64_t seed) {
  auto picked = sample_indices(ids.size(), k, seed);
  std::sort(picked.begin(), picked.end());
  std::vector<std::string> out;
  for (auto i : picked) out.push_back(ids[i]);
  return out;
}

namespace {

using unicode::CodePoint;

std::string flip_first(std::string_view s) {
  auto cps = unicode::decode(s);
  if (cps.empty()) return {};
  const CodePoint c = cps.front();
  cps.front() = unicode::is_upper(c) ? unicode::to_lower(c) : unicode::to_upper(c);
  return unicode::encode(cps);
}

bool first_is_upper(std::string_view s) {
  std::size_t len = 0;
  return !s.empty() && unicode::is_upper(unicode::decode_at(s, 0, len));
}

bool word_char_before(std::string_view text, std::size_t pos) {
  if (pos == 0) return false;
  std::size_t b = pos - 1;
  while (b > 0 && (static_cast<unsigned char>(text[b]) & 0xC0) == 0x80) --b;
  std::size_t len = 0;
  return unicode::is_word_char(unicode::decode_at(text, b, len));
}

bool word_char_at(std::string_view text, std::size_t pos) {
  if (pos >= text.size()) return false;
  std::size_t len = 0;
  return unicode::is_word_char(unicode::decode_at(text, pos, len));
}

}  // namespace

SwapResult swap_entities(std::string_view document, const std::vector<std::pair<std::string, std::string>>& mapping) {
  SwapResult out;
  out.counts.assign(mapping.size(), 0);
  if (mapping.empty()) {
    out.text = std::string(document);
    return out;
  }
  for (std::size_t i = 0; i < mapping.size(); ++i) {
    if (mapping[i].first.empty()) throw ValidationError("entity swap: empty source phrase");
    const auto a = unicode::to_lower(mapping[i].first);
    for (std::size_t j = 0; j < mapping.size(); ++j) {
      if (i == j) continue;
      const auto b = unicode::to_lower(mapping[j].first);
      if (a.find(b) != std::string::npos)
        throw ValidationError("entity swap: source phrases '" + mapping[i].first + "' and '" + mapping[j].first +
                              "' overlap");
    }
  }
  // Candidate spellings: as given and with the first letter's case flipped.
  struct Pattern {
    std::string text;
    std::size_t entry;
    bool capitalized;
  };
  std::vector<Pattern> patterns;
  for (std::size_t i = 0; i < mapping.size(); ++i) {
    patterns.push_back({mapping[i].first, i, first_is_upper(mapping[i].first)});
    auto flipped = flip_first(mapping[i].first);
    if (flipped != mapping[i].first) patterns.push_back({flipped, i, first_is_upper(flipped)});
  }
  std::stable_sort(patterns.begin(), patterns.end(),
                   [](const Pattern& a, const Pattern& b) { return a.text.size() > b.text.size(); });

  std::size_t i = 0;
  while (i < document.size()) {
    const Pattern* hit = nullptr;
    if (!word_char_before(document, i)) {
      for (const auto& p : patterns) {
        if (document.compare(i, p.text.size(), p.text) == 0 && !word_char_at(document, i + p.text.size())) {
          hit = &p;
          break;
        }
      }
    }
    if (hit == nullptr) {
      out.text.push_back(document[i]);
      ++i;
      continue;
    }
    const auto& replacement = mapping[hit->entry].second;
    out.text += hit->capitalized ? unicode::capitalize_first(replacement) : replacement;
    ++out.counts[hit->entry];
    i += hit->text.size();
  }
  const auto total = std::accumulate(out.counts.begin(), out.counts.end(), std::size_t{0});
  if (total == 0) out.warnings.push_back("entity swap made no replacements");
  for (std::size_t e = 0; e < mapping.size(); ++e)
    if (total > 0 && out.counts[e] == 0)
      out.warnings.push_back("source phrase '" + mapping[e].first + "' not found");
  return out;
}

std::string_view to_string(AttackType t) {
  switch (t) {
    case AttackType::kOmission: return "omission";
    case AttackType::kEntitySwap: return "entity_swap";
    case AttackType::kNegation: return "negation";
  }
  return "?";
}

AttackType parse_attack_type(std::string_view text) {
  if (text == "omission") return AttackType::kOmission;
  if (text == "entity_swap") return AttackType::kEntitySwap;
  if (text == "negation") return AttackType::kNegation;
  throw ValidationError("unknown attack type '" + std::string(text) + "'");
}

std::string_view to_string(AttackTask t) { return t == AttackTask::kCts ? "CTS" : "CLCTS"; }

AttackTask parse_attack_task(std::string_view text) {
  if (text == "CTS") return AttackTask::kCts;
  if (text == "CLCTS") return AttackTask::kClcts;
  throw ValidationError("unknown task '" + std::string(text) + "' (expected CTS or CLCTS)");
}

namespace {

std::string fraction_label(double f) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", f);
  return buf;
}

std::vector<std::pair<std::string, std::string>> mapping_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw ValidationError("mapping must be an array");
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& e : j) {
    if (e.is_array() && e.size() == 2 && e[0].is_string() && e[1].is_string())
      out.emplace_back(e[0].get<std::string>(), e[1].get<std::string>());
    else if (e.is_object() && e.contains("from") && e.contains("to") && e["from"].is_string() && e["to"].is_string())
      out.emplace_back(e["from"].get<std::string>(), e["to"].get<std::string>());
    else
      throw ValidationError("mapping entries must be [from, to] or {\"from\", \"to\"}");
  }
  if (out.empty()) throw ValidationError("mapping is empty");
  return out;
}

void validate_params(AttackType type, const nlohmann::json& params) {
  if (!params.is_object()) throw ValidationError("params must be an object");
  switch (type) {
    case AttackType::kOmission: {
      if (!params.contains("drop_fraction") || !params["drop_fraction"].is_number())
        throw ValidationError("omission params need a numeric drop_fraction");
      const double f = params["drop_fraction"].get<double>();
      if (!(f >= 0 && f < 1)) throw ValidationError("drop_fraction must lie in [0, 1)");
      if (!params.contains("seed") || !params["seed"].is_number_integer())
        throw ValidationError("omission params need an integer seed");
      break;
    }
    case AttackType::kEntitySwap:
      if (!params.contains("mapping")) throw ValidationError("entity_swap params need a mapping");
      mapping_from_json(params["mapping"]);
      break;
    case AttackType::kNegation:
      if (!params.contains("description") || !params["description"].is_string() ||
          params["description"].get<std::string>().empty())
        throw ValidationError("negation params need a non-empty description");
      break;
  }
}

}  // namespace

AttackCase make_omission_case(const SummaryPair& pair, double fraction, std::uint64_t seed) {
  auto r = omit_sentences(pair.document, fraction, seed, pair.lang_src);
  AttackCase c;
  c.case_id = pair.id + ":omission:" + fraction_label(fraction) + ":" + std::to_string(seed);
  c.source_doc_id = pair.id;
  c.attack_type = AttackType::kOmission;
  c.params = {{"drop_fraction", fraction},
              {"seed", seed},
              {"sentence_count", r.sentence_count},
              {"dropped", r.dropped}};
  c.attacked_document = std::move(r.text);
  return c;
}

AttackCase make_swap_case(const SummaryPair& pair, const std::vector<std::pair<std::string, std::string>>& mapping,
                          std::vector<std::string>* warnings) {
  auto r = swap_entities(pair.document, mapping);
  if (warnings != nullptr)
    for (const auto& w : r.warnings) warnings->push_back(pair.id + ": " + w);
  AttackCase c;
  c.case_id = pair.id + ":entity_swap";
  c.source_doc_id = pair.id;
  c.attack_type = AttackType::kEntitySwap;
  nlohmann::json m = nlohmann::json::array();
  for (std::size_t i = 0; i < mapping.size(); ++i)
    m.push_back({{"from", mapping[i].first}, {"to", mapping[i].second}, {"count", r.counts[i]}});
  c.params = {{"mapping", m}};
  c.attacked_document = std::move(r.text);
  return c;
}

std::vector<AttackCase> parse_attack_cases(std::istream& in, const std::string& source) {
  static const std::set<std::string> kKeys = {"case_id", "source_doc_id", "attack_type", "params",
                                              "attacked_document"};
  std::vector<AttackCase> out;
  std::map<std::string, std::size_t> seen;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed JSON: ") + e.what());
      }
      if (!j.is_object()) throw ValidationError("expected a JSON object");
      for (const auto& [k, v] : j.items())
        if (!kKeys.count(k)) throw ValidationError("unknown field '" + k + "'");
      for (const char* k : {"case_id", "source_doc_id", "attack_type", "attacked_document"})
        if (!j.contains(k) || !j[k].is_string()) throw ValidationError(std::string("missing string field '") + k + "'");
      AttackCase c;
      c.case_id = j["case_id"];
      c.source_doc_id = j["source_doc_id"];
      c.attack_type = parse_attack_type(j["attack_type"].get<std::string>());
      c.params = j.value("params", nlohmann::json::object());
      validate_params(c.attack_type, c.params);
      c.attacked_document = j["attacked_document"];
      if (c.attacked_document.empty()) throw ValidationError("attacked_document is empty");
      if (auto it = seen.find(c.case_id); it != seen.end())
        throw ValidationError("duplicate case_id '" + c.case_id + "' (first on line " + std::to_string(it->second) + ")");
      seen[c.case_id] = number;
      out.push_back(std::move(c));
    } catch (const ValidationError& e) {
      throw ValidationError(at_line(source, number, e.what()));
    }
  }
  return out;
}

std::vector<AttackCase> load_attack_cases(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  return parse_attack_cases(in, path);
}

void write_attack_cases(std::ostream& out, const std::vector<AttackCase>& cases) {
  for (const auto& c : cases) {
    nlohmann::json j = {{"case_id", c.case_id},
                        {"source_doc_id", c.source_doc_id},
                        {"attack_type", to_string(c.attack_type)},
                        {"params", c.params},
                        {"attacked_document", c.attacked_document}};
    out << j.dump() << '\n';
  }
}

namespace {

bool parse_bool(const std::string& s) {
  const auto v = unicode::to_lower(s);
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw ValidationError("success must be 1/0/true/false/yes/no, got '" + s + "'");
}

}  // namespace

std::vector<AttackJudgment> parse_judgments(std::istream& in, const std::string& source, bool strict_temperatures) {
  auto records = csv::parse(in, source);
  if (records.empty() || records.front().fields != kJudgmentsHeader)
    throw ValidationError(source + ": expected header 'case_id,task,temperature,annotator_id,success'");
  std::vector<AttackJudgment> out;
  std::map<std::tuple<std::string, AttackTask, double, std::string>, std::size_t> seen;
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& r = records[i];
    try {
      if (r.fields.size() != kJudgmentsHeader.size())
        throw ValidationError("expected 5 fields, got " + std::to_string(r.fields.size()));
      AttackJudgment j;
      j.case_id = r.fields[0];
      j.task = parse_attack_task(r.fields[1]);
      j.temperature = parse_double(r.fields[2], "temperature");
      j.annotator_id = r.fields[3];
      j.success = parse_bool(r.fields[4]);
      if (j.case_id.empty() || j.annotator_id.empty()) throw ValidationError("empty case_id or annotator_id");
      if (strict_temperatures && j.temperature != 0.0 && j.temperature != 0.7 && j.temperature != 1.0)
        throw ValidationError("temperature " + r.fields[2] + " is not one of 0, 0.7, 1");
      auto key = std::make_tuple(j.case_id, j.task, j.temperature, j.annotator_id);
      if (auto it = seen.find(key); it != seen.end())
        throw ValidationError("duplicate judgment (first on line " + std::to_string(it->second) + ")");
      seen[key] = r.line;
      out.push_back(std::move(j));
    } catch (const ValidationError& e) {
      throw ValidationError(at_line(source, r.line, e.what()));
    }
  }
  return out;
}

std::vector<AttackJudgment> load_judgments(const std::string& path, bool strict_temperatures) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  return parse_judgments(in, path, strict_temperatures);
}

void write_judgments(std::ostream& out, const std::vector<AttackJudgment>& judgments) {
  csv::write_row(out, kJudgmentsHeader);
  for (const auto& j : judgments)
    csv::write_row(out, {j.case_id, std::string(to_string(j.task)), format_double(j.temperature), j.annotator_id,
                         j.success ? "1" : "0"});
}

std::map<std::pair<AttackType, AttackTask>, AccuracyCell> attack_accuracy(const std::vector<AttackCase>& cases,
                                                                         const std::vector<AttackJudgment>& judgments) {
  std::map<std::string, AttackType> type_of;
  for (const auto& c : cases) type_of[c.case_id] = c.attack_type;
  std::map<std::pair<AttackType, AttackTask>, AccuracyCell> cells;
  for (const auto& j : judgments) {
    auto it = type_of.find(j.case_id);
    if (it == type_of.end()) throw ValidationError("judgment for unknown case '" + j.case_id + "'");
    auto& cell = cells[{it->second, j.task}];
    ++cell.total;
    cell.successes += j.success;
  }
  return cells;
}

nlohmann::json accuracy_table(const std::map<std::pair<AttackType, AttackTask>, AccuracyCell>& cells) {
  auto row_name = [](AttackType t) -> std::string {
    switch (t) {
      case AttackType::kEntitySwap: return "Entity swap";
      case AttackType::kNegation: return "Negation";
      case AttackType::kOmission: return "Omission";
    }
    return "?";
  };
  nlohmann::json table = nlohmann::json::object();
  nlohmann::json detail = nlohmann::json::object();
  for (const auto& [key, cell] : cells) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", cell.accuracy());
    const std::string row = row_name(key.first), col(to_string(key.second));
    table[row][col] = buf;
    detail[row][col] = {{"successes", cell.successes}, {"total", cell.total}, {"accuracy", cell.accuracy()}};
  }
  return {{"table", table}, {"detail", detail}};
}

KappaResult judgment_kappa(const std::vector<AttackJudgment>& judgments, const std::string& annotator_a,
                           const std::string& annotator_b) {
  using Item = std::tuple<std::string, AttackTask, double>;
  std::map<Item, bool> a, b;
  for (const auto& j : judgments) {
    const Item item{j.case_id, j.task, j.temperature};
    if (j.annotator_id == annotator_a) a[item] = j.success;
    else if (j.annotator_id == annotator_b) b[item] = j.success;
  }
  std::vector<std::string> la, lb;
  for (const auto& [item, s] : a) {
    auto it = b.find(item);
    if (it == b.end()) continue;
    la.push_back(s ? "success" : "failure");
    lb.push_back(it->second ? "success" : "failure");
  }
  if (la.empty())
    throw ValidationError("annotators '" + annotator_a + "' and '" + annotator_b + "' share no judged items");
  return cohens_kappa(la, lb);
}

DecaySeries decay_scores(const std::vector<DecayDocument>& documents,
                         const std::vector<std::pair<std::string, DecayMetric>>& metrics) {
  if (metrics.empty()) throw ValidationError("decay: no metrics");
  DecaySeries series;
  for (const auto& doc : documents) {
    auto base = doc.summaries.find(0.0);
    if (base == doc.summaries.end())
      throw ValidationError("decay: document '" + doc.doc_id + "' has no fraction-0 baseline summary");
    for (const auto& [f, summary] : doc.summaries) {
      if (!(f >= 0 && f <= 1)) throw ValidationError("decay: fraction outside [0, 1]");
      for (const auto& [name, metric] : metrics) series[doc.doc_id][name][f] = metric(summary, base->second);
    }
  }
  return series;
}

namespace {

void mean_and_ci(const std::vector<double>& v, DecayPoint& p) {
  const double n = static_cast<double>(v.size());
  p.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  p.units = v.size();
  if (v.size() < 2) return;
  double ss = 0;
  for (double x : v) ss += (x - p.mean) * (x - p.mean);
  p.ci_half_width = 1.96 * std::sqrt(ss / (n - 1)) / std::sqrt(n);
}

}  // namespace

DecayCurve decay_curve(const DecaySeries& series, DecayCi ci) {
  DecayCurve curve;
  // fraction -> doc -> metric -> scaled value
  std::map<double, std::map<std::string, std::map<std::string, double>>> scaled;
  for (const auto& [doc, metrics] : series) {
    for (const auto& [metric, values] : metrics) {
      if (values.empty()) continue;
      auto [lo, hi] = std::minmax_element(values.begin(), values.end(),
                                          [](const auto& a, const auto& b) { return a.second < b.second; });
      const double range = hi->second - lo->second;
      if (range == 0) {
        curve.warnings.push_back(doc + ": metric " + metric + " is constant across fractions; skipped");
        continue;
      }
      for (const auto& [f, v] : values) scaled[f][doc][metric] = (v - lo->second) / range;
    }
  }
  if (scaled.empty()) throw ValidationError("decay: no document has a usable metric series");
  for (const auto& [f, docs] : scaled) {
    DecayPoint p;
    p.fraction = f;
    std::vector<double> units;
    if (ci == DecayCi::kAcrossDocuments) {
      for (const auto& [doc, metrics] : docs) {
        double sum = 0;
        for (const auto& [m, v] : metrics) sum += v;
        units.push_back(sum / static_cast<double>(metrics.size()));
      }
    } else {
      std::map<std::string, std::pair<double, std::size_t>> per_metric;
      for (const auto& [doc, metrics] : docs)
        for (const auto& [m, v] : metrics) {
          per_metric[m].first += v;
          ++per_metric[m].second;
        }
      for (const auto& [m, s] : per_metric) units.push_back(s.first / static_cast<double>(s.second));
    }
    mean_and_ci(units, p);
    curve.points.push_back(p);
  }
  return curve;
}

nlohmann::json decay_report(const DecayCurve& curve, DecayCi ci) {
  nlohmann::json points = nlohmann::json::array();
  for (const auto& p : curve.points)
    points.push_back({{"fraction", p.fraction},
                      {"mean", p.mean},
                      {"ci95", p.ci_half_width ? nlohmann::json(*p.ci_half_width) : nlohmann::json(nullptr)},
                      {"units", p.units}});
  return {{"scaling", "per-document min-max"},
          {"ci", ci == DecayCi::kAcrossDocuments ? "across documents" : "across metrics"},
          {"points", points},
          {"warnings", curve.warnings}};
}

}  // namespace clcts
