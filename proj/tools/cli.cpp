#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "clcts/attacks.hpp"
#include "clcts/corpus.hpp"
#include "clcts/csv.hpp"
#include "clcts/error.hpp"
#include "clcts/llm.hpp"
#include "clcts/manifest.hpp"
#include "clcts/metaeval.hpp"
#include "clcts/metrics.hpp"
#include "clcts/parallel.hpp"
#include "clcts/regression.hpp"
#include "clcts/semdiv.hpp"
#include "clcts/syntax.hpp"
#include "clcts/textstats.hpp"
#include "clcts/title.hpp"
#include "clcts/transport.hpp"

namespace clcts::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Common {
  std::string out_dir = ".";
  std::string format = "json";
  std::uint64_t seed = 0;
  unsigned jobs = 1;
};

// Collects the manifest and writes artifacts into the output directory.
class Run {
 public:
  Run(const Common& common, std::string subcommand, std::ostream& log) : common_(common), log_(log) {
    manifest_.subcommand = std::move(subcommand);
    manifest_.timestamp = manifest_timestamp();
    manifest_.settings["format"] = common.format;
    fs::create_directories(common.out_dir);
  }

  RunManifest& manifest() { return manifest_; }
  bool csv() const { return common_.format == "csv"; }

  void input(const std::string& path) { manifest_.add_input(path); }

  void write(const std::string& name, const std::string& content) {
    const auto path = fs::path(common_.out_dir) / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) throw ValidationError("cannot write '" + path.string() + "'");
    manifest_.outputs[name] = sha256_hex(content);
    log_ << "wrote " << path.string() << '\n';
  }

  void write_json(const std::string& name, json report) {
    report["manifest"] = manifest_without_outputs();
    write(name, report.dump(2) + "\n");
  }

  void finish() {
    const auto path = fs::path(common_.out_dir) / "manifest.json";
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << manifest_.to_json().dump(2) << '\n';
    if (!out) throw ValidationError("cannot write '" + path.string() + "'");
  }

 private:
  json manifest_without_outputs() const {
    auto m = manifest_;
    m.outputs.clear();
    return m.to_json();
  }

  const Common& common_;
  std::ostream& log_;
  RunManifest manifest_;
};

TokenizationPolicy make_policy(bool keep_case, bool keep_punct) {
  TokenizationPolicy p;
  p.lowercase = !keep_case;
  p.strip_punctuation = !keep_punct;
  return p;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Calls fn(line_number, object) for every non-blank JSONL line.
template <typename Fn>
void for_each_jsonl(const std::string& path, Fn&& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ValidationError(at_line(path, number, std::string("malformed JSON: ") + e.what()));
    }
    if (!j.is_object()) throw ValidationError(at_line(path, number, "expected a JSON object"));
    try {
      fn(number, j);
    } catch (const json::exception& e) {
      throw ValidationError(at_line(path, number, e.what()));
    } catch (const ValidationError& e) {
      throw ValidationError(at_line(path, number, e.what()));
    }
  }
}

std::string csv_line(const std::vector<std::string>& fields) {
  std::ostringstream ss;
  csv::write_row(ss, fields);
  return ss.str();
}

std::vector<const SummaryPair*> select_pairs(const Corpus& corpus, const std::vector<std::string>& ids,
                                             std::size_t limit) {
  std::vector<const SummaryPair*> out;
  if (ids.empty()) {
    for (const auto& p : corpus.pairs()) out.push_back(&p);
  } else {
    for (const auto& id : ids) {
      const auto* p = corpus.find(id);
      if (p == nullptr) throw ValidationError("document '" + id + "' is not in corpus '" + corpus.name() + "'");
      out.push_back(p);
    }
  }
  if (limit > 0 && out.size() > limit) out.resize(limit);
  return out;
}

// ---------------------------------------------------------------------------

struct CorpusArgs {
  std::string corpus;
  std::string direction;
  bool keep_case = false;
  bool keep_punct = false;
};

void add_corpus_args(CLI::App* sub, CorpusArgs& a, bool policy = true) {
  sub->add_option("--corpus", a.corpus, "Corpus JSONL")->required()->check(CLI::ExistingFile);
  sub->add_option("--direction", a.direction, "hDe-En, hEn-De, hDe-De, hEn-En or external")->required();
  if (policy) {
    sub->add_flag("--keep-case", a.keep_case, "Do not lower-case tokens");
    sub->add_flag("--keep-punct", a.keep_punct, "Keep punctuation tokens");
  }
}

Corpus open_corpus(Run& run, const CorpusArgs& a) {
  run.input(a.corpus);
  run.manifest().settings["direction"] = a.direction;
  return load_corpus(a.corpus, parse_direction(a.direction));
}

// stats ----------------------------------------------------------------------

struct StatsArgs {
  CorpusArgs corpus;
};

void cmd_stats(const Common& c, const StatsArgs& a, std::ostream& log) {
  Run run(c, "stats", log);
  const auto corpus = open_corpus(run, a.corpus);
  const auto policy = make_policy(a.corpus.keep_case, a.corpus.keep_punct);
  run.manifest().policy = policy.id();
  const auto stats = corpus_stats(corpus, policy, c.jobs);
  const auto report = stats_report(corpus, stats, policy);
  if (run.csv()) {
    const std::vector<std::string> cols = {"Dataset",        "Direction",     "Size",        "Mean Length Doc.",
                                           "Mean Length Summ.", "Sentence Doc.", "Sentence Summ.", "Compression"};
    std::vector<std::string> row;
    for (const auto& col : cols) {
      const auto& v = report.at(col);
      row.push_back(v.is_string() ? v.get<std::string>() : v.is_number_float() ? format_double(v.get<double>()) : v.dump());
    }
    run.write("stats.csv", csv_line(cols) + csv_line(row));
  } else {
    run.write_json("stats.json", report);
  }
  run.finish();
}

// divergence -------------------------------------------------------------------

struct DivergenceArgs {
  CorpusArgs corpus;
  std::string jaccard_mode = "corpus";
  int bin_width = 10;
  std::string conllu;
  bool include_punct = false;
  bool include_root = false;
  bool macro = false;
};

void cmd_divergence(const Common& c, const DivergenceArgs& a, std::ostream& log) {
  Run run(c, "divergence", log);
  const auto corpus = open_corpus(run, a.corpus);
  const auto policy = make_policy(a.corpus.keep_case, a.corpus.keep_punct);
  run.manifest().policy = policy.id();
  run.manifest().settings["jaccard_mode"] = a.jaccard_mode;
  run.manifest().settings["bin_width"] = std::to_string(a.bin_width);

  const auto mode = a.jaccard_mode == "pair" ? JaccardMode::kPerPairMean : JaccardMode::kCorpusVocabulary;
  const double jac = jaccard_divergence(corpus, policy, mode);
  const auto hist = year_histogram(corpus.pairs(), a.bin_width);

  json report = {{"dataset", corpus.name()},
                 {"jaccard", {{"value", jac}, {"mode", a.jaccard_mode}, {"tokenization_policy", policy.id()}}},
                 {"year_histogram", histogram_report(hist, a.bin_width)}};
  std::optional<MddReport> mdd;
  MddOptions mdd_opts{!a.include_punct, !a.include_root};
  const auto agg = a.macro ? MddAggregation::kMacro : MddAggregation::kMicro;
  if (!a.conllu.empty()) {
    run.input(a.conllu);
    run.manifest().settings["mdd"] = std::string(a.macro ? "macro" : "micro") + (a.include_punct ? "+punct" : "") +
                                     (a.include_root ? "+root" : "");
    mdd = corpus_mdd(parse_conllu_file(a.conllu), mdd_opts, agg);
    report["mdd"] = mdd_report(corpus.name(), *mdd, mdd_opts, agg).at(corpus.name());
  }
  if (run.csv()) {
    std::string body = csv_line({"measure", "value"}) + csv_line({"jaccard", format_double(jac)});
    if (mdd) body += csv_line({"mdd", format_double(mdd->corpus_mdd)});
    run.write("divergence.csv", body);
    std::string h = csv_line({"bin", "start", "count"});
    for (const auto& [start, count] : hist)
      h += csv_line({std::to_string(start) + "-" + std::to_string(start + a.bin_width - 1), std::to_string(start),
                     std::to_string(count)});
    run.write("year_histogram.csv", h);
  } else {
    run.write_json("divergence.json", report);
  }
  run.finish();
}

// similarity ---------------------------------------------------------------------

struct SimilarityArgs {
  CorpusArgs corpus;
  std::string embeddings;
};

void cmd_similarity(const Common& c, const SimilarityArgs& a, std::ostream& log) {
  Run run(c, "similarity", log);
  const auto corpus = open_corpus(run, a.corpus);
  run.input(a.embeddings);
  const auto table = ingest_embeddings(a.embeddings);
  run.manifest().settings["embedding_model"] = table.model();
  const auto report = corpus_similarity(corpus, table, c.jobs);
  if (run.csv()) {
    std::string body = csv_line({"doc_id", "similarity"});
    for (const auto& [id, v] : report.per_document) body += csv_line({id, format_double(v)});
    run.write("similarity.csv", body);
  } else {
    run.write_json("similarity.json", similarity_report(corpus.name(), report));
  }
  run.finish();
}

// score ----------------------------------------------------------------------------

struct ScoreArgs {
  CorpusArgs corpus;
  std::string candidates;
  std::vector<std::string> ingest;
};

void cmd_score(const Common& c, const ScoreArgs& a, std::ostream& log) {
  Run run(c, "score", log);
  const auto corpus = open_corpus(run, a.corpus);
  const auto policy = make_policy(a.corpus.keep_case, a.corpus.keep_punct);
  run.manifest().policy = policy.id();
  run.input(a.candidates);
  const auto candidates = load_candidates(a.candidates);
  MetricScoreTable ingested;
  for (const auto& path : a.ingest) {
    run.input(path);
    merge_scores(ingested, ingest_scores(path));
  }
  const auto table = score_systems(corpus, candidates, ingested, policy, c.jobs);
  std::ostringstream ss;
  write_scores(ss, table, true);
  run.write("scores.csv", ss.str());
  run.finish();
}

// correlate --------------------------------------------------------------------------

struct CorrelateArgs {
  std::string scores;
  std::string annotations;
  bool pooled = false;
  std::string rater_kind = "human";
};

void cmd_correlate(const Common& c, const CorrelateArgs& a, std::ostream& log) {
  Run run(c, "correlate", log);
  run.input(a.scores);
  run.input(a.annotations);
  run.manifest().settings["human_aggregation"] = a.pooled ? "pooled" : "mean";
  run.manifest().settings["rater_kind"] = a.rater_kind;
  const auto scores = ingest_scores(a.scores);
  const auto records = ingest_annotations(a.annotations);
  const auto kind = a.rater_kind == "llm" ? RaterKind::kLlm : RaterKind::kHuman;
  std::map<Dimension, MetricCorrelations> matrix;
  for (Dimension d : kAllDimensions)
    matrix[d] = metric_human_correlation(
        scores, records, d, a.pooled ? HumanAggregation::kPooled : HumanAggregation::kMeanOverRaters, kind);
  for (const auto& [d, m] : matrix)
    for (const auto& w : m.warnings) log << "warning: " << to_string(d) << ": " << w << '\n';
  if (run.csv()) {
    std::ostringstream ss;
    write_correlation_csv(ss, matrix);
    run.write("correlation.csv", ss.str());
  } else {
    run.write_json("correlation.json", correlation_json(matrix));
  }
  run.finish();
}

// agree ---------------------------------------------------------------------------------

struct AgreeArgs {
  std::string annotations;
};

void cmd_agree(const Common& c, const AgreeArgs& a, std::ostream& log) {
  Run run(c, "agree", log);
  run.input(a.annotations);
  const auto records = ingest_annotations(a.annotations);
  json agreement = json::object();
  json human_llm = json::object();
  for (Dimension d : kAllDimensions) {
    const std::string name(to_string(d));
    try {
      const auto r = interannotator_agreement(records, d);
      json pairs = json::array();
      for (const auto& p : r.pairs)
        pairs.push_back({{"rater_a", p.rater_a}, {"rater_b", p.rater_b}, {"items", p.common_items}, {"rho", p.rho}});
      agreement[name] = {{"mean_rho", r.mean_rho},
                         {"pairs", pairs},
                         {"skipped_insufficient_overlap", r.skipped_insufficient_overlap},
                         {"skipped_zero_variance", r.skipped_zero_variance}};
    } catch (const ValidationError& e) {
      agreement[name] = nullptr;
      log << "warning: " << name << ": " << e.what() << '\n';
    }
    try {
      const auto r = human_llm_agreement(records, d);
      human_llm[name] = {{"rho", r.rho}, {"n", r.n}, {"p", r.p_value}, {"stars", r.stars}};
    } catch (const ValidationError& e) {
      human_llm[name] = nullptr;
    }
  }
  const auto means = rating_table(records);
  if (run.csv()) {
    std::string body = csv_line({"system", "coherence", "consistency", "fluency", "relevance"});
    for (const auto& [system, row] : means.items()) {
      std::vector<std::string> fields = {system};
      for (Dimension d : kAllDimensions) fields.push_back(row.value(std::string(to_string(d)), "-/-"));
      body += csv_line(fields);
    }
    run.write("rating_means.csv", body);
    std::string agree = csv_line({"dimension", "interannotator_rho", "human_llm_rho"});
    for (Dimension d : kAllDimensions) {
      const std::string name(to_string(d));
      agree += csv_line({name, agreement[name].is_null() ? "" : format_double(agreement[name]["mean_rho"].get<double>()),
                         human_llm[name].is_null() ? "" : format_double(human_llm[name]["rho"].get<double>())});
    }
    run.write("agreement.csv", agree);
  } else {
    run.write_json("agreement.json",
                   {{"interannotator", agreement}, {"rating_means", means}, {"human_llm", human_llm}});
  }
  run.finish();
}

// regress -----------------------------------------------------------------------------------

struct RegressArgs {
  std::string features;
  std::string direction;
  std::string base_year;
  std::string base_model;
  std::string sd = "sample";
  bool raw_response = false;
  // assembling features instead of reading them
  std::string corpus;
  std::string embeddings;
  std::string conllu;
  std::string scores;
  bool keep_case = false;
  bool keep_punct = false;
};

void cmd_regress(const Common& c, const RegressArgs& a, std::ostream& log) {
  Run run(c, "regress", log);
  const auto direction = parse_direction(a.direction);
  run.manifest().settings["direction"] = a.direction;
  run.manifest().settings["sd"] = a.sd;
  std::vector<FeatureRow> rows;
  if (!a.features.empty()) {
    run.input(a.features);
    rows = load_features(a.features);
  } else {
    if (a.corpus.empty() || a.embeddings.empty() || a.conllu.empty() || a.scores.empty())
      throw ValidationError("regress needs --features, or all of --corpus, --embeddings, --conllu and --scores");
    for (const auto* p : {&a.corpus, &a.embeddings, &a.conllu, &a.scores}) run.input(*p);
    const auto corpus = load_corpus(a.corpus, direction);
    const auto policy = make_policy(a.keep_case, a.keep_punct);
    run.manifest().policy = policy.id();
    FeatureSources sources;
    sources.similarity = corpus_similarity(corpus, ingest_embeddings(a.embeddings), c.jobs).per_document;
    for (const auto& p : corpus.pairs())
      sources.length[p.id] = static_cast<double>(count_text(p.document, p.lang_src, policy).tokens);
    const auto docs = parse_conllu_file(a.conllu);
    sources.mdd = corpus_mdd(docs).per_document;
    rows = assemble_features(corpus, sources, ingest_scores(a.scores));
    std::ostringstream ss;
    write_features(ss, rows);
    run.write("features.csv", ss.str());
  }
  FeatureModelOptions opts;
  opts.base_model = a.base_model;
  opts.base_year = a.base_year;
  opts.sd = a.sd == "population" ? SdKind::kPopulation : SdKind::kSample;
  opts.standardize_response = !a.raw_response;
  if (!a.base_year.empty()) run.manifest().settings["base_year"] = a.base_year;
  const auto result = fit_feature_model(rows, direction, opts);
  for (const auto& n : result.notes) log << "note: " << n << '\n';
  const auto report = regression_report(result, direction);
  if (run.csv()) {
    std::string body = csv_line({"term", "beta", "std_err", "t", "p", "stars", "cell"});
    for (std::size_t j = 0; j < result.fit.terms.size(); ++j) {
      const auto& co = result.fit.coefficients[j];
      body += csv_line({result.fit.terms[j], format_double(co.beta), format_double(co.std_err), format_double(co.t),
                        format_double(co.p), std::to_string(co.stars), format_coefficient(co)});
    }
    run.write("regression.csv", body);
  } else {
    run.write_json("regression.json", report);
  }
  run.finish();
}

// attack-gen ------------------------------------------------------------------------------------

struct AttackGenArgs {
  std::string type;
  CorpusArgs corpus;
  std::vector<double> fractions;
  std::vector<std::string> docs;
  bool select = false;
  std::size_t min_sents = 100;
  std::size_t max_sents = 150;
  std::size_t sample = 0;
  std::string mapping;
  std::vector<std::string> maps;
  std::string cases;
};

std::vector<std::pair<std::string, std::string>> parse_map_flags(const std::vector<std::string>& maps) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& m : maps) {
    const auto eq = m.find('=');
    if (eq == std::string::npos || eq == 0) throw ValidationError("--map expects FROM=TO, got '" + m + "'");
    out.emplace_back(m.substr(0, eq), m.substr(eq + 1));
  }
  return out;
}

void cmd_attack_gen(const Common& c, const AttackGenArgs& a, std::ostream& log) {
  Run run(c, "attack-gen", log);
  run.manifest().settings["attack_type"] = a.type;
  std::vector<AttackCase> cases;
  if (a.type == "negation") {
    if (a.cases.empty()) throw ValidationError("negation cases are authored by hand; pass them with --cases");
    run.input(a.cases);
    cases = load_attack_cases(a.cases);
    for (const auto& k : cases)
      if (k.attack_type != AttackType::kNegation)
        throw ValidationError("case '" + k.case_id + "' is not a negation case");
  } else {
    if (a.corpus.corpus.empty() || a.corpus.direction.empty())
      throw ValidationError(a.type + " attacks need --corpus and --direction");
    const auto corpus = open_corpus(run, a.corpus);
    std::vector<std::string> ids = a.docs;
    if (a.select) {
      ids = select_omission_candidates(corpus, a.min_sents, a.max_sents);
      log << ids.size() << " document(s) with " << a.min_sents << "-" << a.max_sents << " sentences\n";
      run.manifest().settings["select"] = std::to_string(a.min_sents) + "-" + std::to_string(a.max_sents);
    }
    if (a.sample > 0) {
      if (ids.empty())
        for (const auto& p : corpus.pairs()) ids.push_back(p.id);
      if (a.sample > ids.size())
        throw ValidationError("cannot sample " + std::to_string(a.sample) + " of " + std::to_string(ids.size()) +
                              " candidate documents");
      ids = sample_documents(ids, a.sample, c.seed);
      run.manifest().settings["sample"] = std::to_string(a.sample);
    }
    const auto pairs = select_pairs(corpus, ids, 0);
    run.manifest().seeds["seed"] = c.seed;
    if (a.type == "omission") {
      if (a.fractions.empty()) throw ValidationError("omission needs at least one --fraction");
      for (const auto* p : pairs)
        for (double f : a.fractions) cases.push_back(make_omission_case(*p, f, c.seed));
    } else {
      std::map<std::string, std::vector<std::pair<std::string, std::string>>> per_doc;
      auto global = parse_map_flags(a.maps);
      if (!a.mapping.empty()) {
        run.input(a.mapping);
        const auto j = json::parse(read_file(a.mapping));
        if (!j.is_object()) throw ValidationError(a.mapping + ": expected {doc_id: [[from, to], ...]}");
        for (const auto& [doc, entries] : j.items()) {
          auto& list = per_doc[doc];
          for (const auto& e : entries) {
            if (!e.is_array() || e.size() != 2) throw ValidationError(a.mapping + ": entries must be [from, to]");
            list.emplace_back(e[0].get<std::string>(), e[1].get<std::string>());
          }
        }
      }
      if (global.empty() && per_doc.empty()) throw ValidationError("entity swap needs --map or --mapping");
      std::vector<std::string> warnings;
      for (const auto* p : pairs) {
        auto it = per_doc.find(p->id);
        const auto& mapping = it != per_doc.end() ? it->second : global;
        if (mapping.empty()) continue;
        cases.push_back(make_swap_case(*p, mapping, &warnings));
      }
      for (const auto& w : warnings) log << "warning: " << w << '\n';
    }
  }
  std::ostringstream ss;
  write_attack_cases(ss, cases);
  run.write("attack_cases.jsonl", ss.str());
  run.finish();
}

// attack-score --------------------------------------------------------------------------------------

struct AttackScoreArgs {
  std::string cases;
  std::string judgments;
  bool lenient = false;
  std::vector<std::string> kappa;
};

void cmd_attack_score(const Common& c, const AttackScoreArgs& a, std::ostream& log) {
  Run run(c, "attack-score", log);
  run.input(a.cases);
  run.input(a.judgments);
  const auto cases = load_attack_cases(a.cases);
  const auto judgments = load_judgments(a.judgments, !a.lenient);
  const auto cells = attack_accuracy(cases, judgments);
  json report = accuracy_table(cells);
  std::vector<std::string> annotators = a.kappa;
  if (annotators.empty()) {
    std::set<std::string> ids;
    for (const auto& j : judgments) ids.insert(j.annotator_id);
    if (ids.size() == 2) annotators.assign(ids.begin(), ids.end());
  }
  if (annotators.size() == 2) {
    const auto k = judgment_kappa(judgments, annotators[0], annotators[1]);
    report["kappa"] = {{"annotators", annotators},
                       {"kappa", k.kappa ? json(*k.kappa) : json(nullptr)},
                       {"observed_agreement", k.observed},
                       {"expected_agreement", k.expected},
                       {"items", k.n}};
  } else if (!annotators.empty()) {
    throw ValidationError("--kappa takes exactly two annotator ids");
  }
  if (run.csv()) {
    std::string body = csv_line({"attack", "task", "successes", "total", "accuracy"});
    for (const auto& [key, cell] : cells)
      body += csv_line({std::string(to_string(key.first)), std::string(to_string(key.second)),
                        std::to_string(cell.successes), std::to_string(cell.total), format_double(cell.accuracy())});
    run.write("attack_accuracy.csv", body);
  } else {
    run.write_json("attack_accuracy.json", report);
  }
  run.finish();
}

// decay -----------------------------------------------------------------------------------------------

struct DecayArgs {
  std::string summaries;
  std::string scores;
  std::string lang = "en";
  std::string ci = "documents";
  bool keep_case = false;
  bool keep_punct = false;
};

double parse_fraction_id(const std::string& system_id) {
  std::string text = system_id;
  if (text.rfind("frac=", 0) == 0) text = text.substr(5);
  return parse_double(text, "fraction (system_id)");
}

void cmd_decay(const Common& c, const DecayArgs& a, std::ostream& log) {
  Run run(c, "decay", log);
  const auto policy = make_policy(a.keep_case, a.keep_punct);
  run.manifest().policy = policy.id();
  run.manifest().settings["ci"] = a.ci;
  DecaySeries series;
  if (!a.summaries.empty()) {
    run.input(a.summaries);
    std::map<std::string, DecayDocument> docs;
    for_each_jsonl(a.summaries, [&](std::size_t, const json& j) {
      const auto id = j.at("doc_id").get<std::string>();
      const double f = j.at("fraction").get<double>();
      auto& d = docs[id];
      d.doc_id = id;
      if (!d.summaries.emplace(f, j.at("summary").get<std::string>()).second)
        throw ValidationError("duplicate fraction " + format_double(f) + " for '" + id + "'");
    });
    const std::string lang = a.lang;
    auto rouge = [policy, lang](bool lcs) -> DecayMetric {
      return [policy, lang, lcs](const std::string& cand, const std::string& ref) {
        const auto ct = tokenize(cand, lang, policy);
        const auto rt = tokenize(ref, lang, policy);
        return lcs ? rougeL(ct, rt).f1 : rouge1(ct, rt).f1;
      };
    };
    std::vector<DecayDocument> list;
    for (auto& [id, d] : docs) list.push_back(std::move(d));
    series = decay_scores(list, {{"ROUGE-1-F1", rouge(false)}, {"ROUGE-L-F1", rouge(true)}});
  }
  if (!a.scores.empty()) {
    run.input(a.scores);
    for (const auto& row : ingest_scores(a.scores).rows())
      series[row.doc_id][row.metric_name][parse_fraction_id(row.system_id)] = row.value;
  }
  if (series.empty()) throw ValidationError("decay needs --summaries and/or --scores");
  const auto ci = a.ci == "metrics" ? DecayCi::kAcrossMetrics : DecayCi::kAcrossDocuments;
  const auto curve = decay_curve(series, ci);
  for (const auto& w : curve.warnings) log << "warning: " << w << '\n';
  if (run.csv()) {
    std::string body = csv_line({"fraction", "mean", "ci95", "units"});
    for (const auto& p : curve.points)
      body += csv_line({format_double(p.fraction), format_double(p.mean),
                        p.ci_half_width ? format_double(*p.ci_half_width) : "", std::to_string(p.units)});
    run.write("decay.csv", body);
  } else {
    run.write_json("decay.json", decay_report(curve, ci));
  }
  run.finish();
}

// summarize / judge ---------------------------------------------------------------------------------------

struct TransportArgs {
  std::string replay;
  std::string record;
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string api_key_env = "OPENAI_API_KEY";
  unsigned max_in_flight = 4;
  int min_interval_ms = 0;
  int max_attempts = 5;
};

void add_transport_args(CLI::App* sub, TransportArgs& t) {
  sub->add_option("--replay", t.replay, "Serve responses from recorded fixtures in this directory");
  sub->add_option("--record", t.record, "Record every exchange as a fixture in this directory");
  sub->add_option("--endpoint", t.endpoint, "Chat-completions URL")->capture_default_str();
  sub->add_option("--api-key-env", t.api_key_env, "Environment variable holding the API key")->capture_default_str();
  sub->add_option("--max-in-flight", t.max_in_flight, "Concurrent requests")->capture_default_str();
  sub->add_option("--min-interval-ms", t.min_interval_ms, "Minimum spacing between request starts")->capture_default_str();
  sub->add_option("--max-attempts", t.max_attempts, "HTTP attempts per request")->capture_default_str();
}

std::shared_ptr<ChatTransport> make_transport(const TransportArgs& t, const Common& c, Run& run) {
  if (!t.replay.empty()) {
    run.manifest().settings["transport"] = "replay";
    return std::make_shared<ReplayTransport>(t.replay);
  }
  HttpConfig cfg;
  cfg.endpoint = t.endpoint;
  cfg.api_key_env = t.api_key_env;
  cfg.max_in_flight = t.max_in_flight;
  cfg.min_interval = std::chrono::milliseconds(t.min_interval_ms);
  cfg.backoff.max_attempts = t.max_attempts;
  cfg.jitter_seed = c.seed;
  run.manifest().settings["transport"] = "http";
  run.manifest().settings["endpoint"] = t.endpoint;
  std::shared_ptr<ChatTransport> http = std::make_shared<HttpChatTransport>(cfg);
  if (!t.record.empty()) return std::make_shared<RecordingTransport>(http, t.record);
  return http;
}

struct SummarizeArgs {
  CorpusArgs corpus;
  std::string kind = "e2e";
  std::string model = "gpt-3.5-turbo";
  std::string system_id;
  double temperature = 0.7;
  int max_rounds = 2;
  std::size_t budget = 0;
  std::string extracted;
  std::size_t cap = 100;
  std::vector<std::string> docs;
  std::size_t limit = 0;
  TransportArgs transport;
};

void cmd_summarize(const Common& c, const SummarizeArgs& a, std::ostream& log) {
  Run run(c, "summarize", log);
  const auto corpus = open_corpus(run, a.corpus);
  const auto kind = parse_prompt_kind(a.kind);
  auto& s = run.manifest().settings;
  s["kind"] = a.kind;
  s["model"] = a.model;
  s["temperature"] = format_double(a.temperature);
  s["max_rounds"] = std::to_string(a.max_rounds);
  s["prompts"] = prompt_templates_version();
  s["stopwords"] = stopword_lists_version();
  auto transport = make_transport(a.transport, c, run);

  SummarizeOptions opts;
  opts.model = a.model;
  opts.system_id = a.system_id;
  opts.temperature = a.temperature;
  opts.max_rounds = a.max_rounds;
  if (a.budget > 0) opts.budget = a.budget;

  std::map<std::string, std::vector<std::size_t>> extracted;
  if (!a.extracted.empty()) {
    run.input(a.extracted);
    s["cap"] = std::to_string(a.cap);
    for_each_jsonl(a.extracted, [&](std::size_t, const json& j) {
      extracted[j.at("doc_id").get<std::string>()] = j.at("indices").get<std::vector<std::size_t>>();
    });
  }
  const auto pairs = select_pairs(corpus, a.docs, a.limit);
  std::vector<SummaryResult> results(pairs.size());
  JsonlLog attempts_log((fs::path(c.out_dir) / "summarize.log.jsonl").string());
  parallel_for(pairs.size(), c.jobs, [&](std::size_t i) {
    const auto& pair = *pairs[i];
    if (!a.extracted.empty()) {
      auto it = extracted.find(pair.id);
      if (it == extracted.end()) throw ValidationError("no extracted sentences for '" + pair.id + "'");
      results[i] = retrieve_then_summarize(pair, it->second, corpus.direction(), *transport, opts, a.cap, kind);
    } else {
      results[i] = summarize_with_retry(pair, kind, corpus.direction(), *transport, opts);
    }
    attempts_log.append(results[i].to_json());
  });
  attempts_log.flush();

  std::string summaries, candidates;
  for (const auto& r : results) {
    summaries += r.to_json().dump() + "\n";
    if (r.valid) candidates += json{{"doc_id", r.doc_id}, {"system_id", r.system_id}, {"summary", r.text}}.dump() + "\n";
  }
  run.write("summaries.jsonl", summaries);
  run.write("candidates.jsonl", candidates);
  run.write_json("invalid_outputs.json", {{"invalid_outputs", invalid_output_report(results)}});
  run.finish();
}

struct JudgeArgs {
  CorpusArgs corpus;
  std::string candidates;
  std::string model = "gpt-4-1106-preview";
  double temperature = 0.0;
  TransportArgs transport;
};

void cmd_judge(const Common& c, const JudgeArgs& a, std::ostream& log) {
  Run run(c, "judge", log);
  const auto corpus = open_corpus(run, a.corpus);
  run.input(a.candidates);
  run.manifest().settings["model"] = a.model;
  run.manifest().settings["temperature"] = format_double(a.temperature);
  run.manifest().settings["judge_prompt"] = judge_prompt_version();
  auto transport = make_transport(a.transport, c, run);
  const auto candidates = load_candidates(a.candidates);
  std::vector<std::pair<const SummaryPair*, const std::pair<const std::pair<std::string, std::string>, std::string>*>>
      items;
  for (const auto& entry : candidates) {
    const auto* pair = corpus.find(entry.first.first);
    if (pair == nullptr) throw ValidationError("candidate for unknown document '" + entry.first.first + "'");
    items.emplace_back(pair, &entry);
  }
  JudgeOptions opts{a.model, a.temperature};
  std::vector<JudgeResult> results(items.size());
  parallel_for(items.size(), c.jobs, [&](std::size_t i) {
    const auto& [pair, entry] = items[i];
    results[i] = judge_summary(pair->id, entry->first.second, pair->document, pair->summary, entry->second, *transport,
                               opts);
  });
  std::string lines;
  std::size_t failed = 0;
  for (const auto& r : results) {
    lines += r.to_json().dump() + "\n";
    failed += !r.parse_ok;
  }
  if (failed > 0) log << "warning: " << failed << " judge response(s) could not be parsed\n";
  run.write("judgments.jsonl", lines);
  std::ostringstream ss;
  write_annotations(ss, judge_annotations(results, a.model));
  run.write("llm_annotations.csv", ss.str());
  run.finish();
}

// match ------------------------------------------------------------------------------------------------------

struct MatchArgs {
  std::string documents;
  std::string wiki;
};

void cmd_match(const Common& c, const MatchArgs& a, std::ostream& log) {
  Run run(c, "match", log);
  run.input(a.documents);
  run.input(a.wiki);
  std::vector<TitledDocument> docs;
  for_each_jsonl(a.documents, [&](std::size_t, const json& j) {
    TitledDocument d;
    d.title = j.at("title").get<std::string>();
    d.lang = j.at("lang").get<std::string>();
    for (const auto& [k, v] : j.items())
      if (k != "title" && k != "lang") d.metadata[k] = v.is_string() ? v.get<std::string>() : v.dump();
    docs.push_back(std::move(d));
  });
  std::vector<WikiEntry> wiki;
  for_each_jsonl(a.wiki, [&](std::size_t, const json& j) {
    wiki.push_back({j.at("title").get<std::string>(), j.at("summary").get<std::string>()});
  });
  const auto& normalizer = TitleNormalizer::builtin();
  run.manifest().settings["title_normalization"] = normalizer.version();
  const auto report = match_summaries(docs, wiki, normalizer);
  json matches = json::array();
  for (const auto& m : report.matches)
    matches.push_back({{"document", m.document},
                       {"document_title", docs[m.document].title},
                       {"wiki", m.wiki},
                       {"wiki_title", wiki[m.wiki].title},
                       {"exact", m.exact},
                       {"eszett_fallback", m.eszett_fallback}});
  json ambiguities = json::array();
  for (const auto& amb : report.ambiguities) ambiguities.push_back({{"lang", amb.lang}, {"key", amb.key}, {"wiki", amb.wiki}});
  run.write_json("matches.json", {{"matches", matches},
                                  {"unmatched_documents", report.unmatched_documents},
                                  {"unmatched_wiki", report.unmatched_wiki},
                                  {"ambiguities", ambiguities}});
  run.finish();
}

// verify -------------------------------------------------------------------------------------------------------

struct VerifyArgs {
  std::string manifest;
};

int cmd_verify(const VerifyArgs& a, std::ostream& out) {
  const auto j = json::parse(read_file(a.manifest));
  const auto m = RunManifest::from_json(j.contains("manifest") ? j.at("manifest") : j);
  const auto r = verify_manifest(m, fs::path(a.manifest).parent_path().string().empty()
                                        ? std::string(".")
                                        : fs::path(a.manifest).parent_path().string());
  for (const auto& [path, problem] : r.mismatched) out << "MISMATCH " << path << ": " << problem << '\n';
  out << (r.ok ? "OK" : "FAILED") << ": " << m.inputs.size() << " input(s), " << m.outputs.size()
      << " output(s) checked\n";
  return r.ok ? 0 : 1;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Corpus analytics and meta-evaluation for cross-lingual cross-temporal summarization", "clcts"};
  app.set_version_flag("--version", library_version());
  app.set_config("--config", "", "TOML file with option values; command-line flags take precedence");
  app.require_subcommand(1);
  app.fallthrough();

  Common common;
  app.add_option("--out", common.out_dir, "Output directory")->capture_default_str();
  app.add_option("--format", common.format, "Report format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
  app.add_option("--seed", common.seed, "Seed for every random choice")->capture_default_str();
  app.add_option("--jobs", common.jobs, "Worker threads (0 = all cores)")->capture_default_str();

  StatsArgs stats;
  auto* s_stats = app.add_subcommand("stats", "Length, sentence and compression statistics");
  add_corpus_args(s_stats, stats.corpus);

  DivergenceArgs div;
  auto* s_div = app.add_subcommand("divergence", "Jaccard overlap, year distribution and mean dependency distance");
  add_corpus_args(s_div, div.corpus);
  s_div->add_option("--jaccard-mode", div.jaccard_mode, "corpus or pair")->check(CLI::IsMember({"corpus", "pair"}));
  s_div->add_option("--bin-width", div.bin_width, "Year histogram bin width")->capture_default_str();
  s_div->add_option("--conllu", div.conllu, "Dependency parses of the documents")->check(CLI::ExistingFile);
  s_div->add_flag("--include-punct", div.include_punct, "Count edges touching punctuation");
  s_div->add_flag("--include-root", div.include_root, "Count the root edge");
  s_div->add_flag("--macro", div.macro, "Average per-sentence MDD instead of pooling edges");

  SimilarityArgs sim;
  auto* s_sim = app.add_subcommand("similarity", "Mean document-summary sentence cosine similarity");
  add_corpus_args(s_sim, sim.corpus, false);
  s_sim->add_option("--embeddings", sim.embeddings, "Sentence embeddings JSONL")->required()->check(CLI::ExistingFile);

  ScoreArgs score;
  auto* s_score = app.add_subcommand("score", "ROUGE scores, ingested metric scores and MENLI-W combinations");
  add_corpus_args(s_score, score.corpus);
  s_score->add_option("--candidates", score.candidates, "Candidate summaries JSONL")->required()->check(CLI::ExistingFile);
  s_score->add_option("--ingest", score.ingest, "Metric score CSV to merge (repeatable)")->check(CLI::ExistingFile);

  CorrelateArgs corr;
  auto* s_corr = app.add_subcommand("correlate", "Segment-level metric-rating Spearman correlation");
  s_corr->add_option("--scores", corr.scores, "Metric score CSV")->required()->check(CLI::ExistingFile);
  s_corr->add_option("--annotations", corr.annotations, "Likert annotations CSV")->required()->check(CLI::ExistingFile);
  s_corr->add_flag("--pooled", corr.pooled, "One point per (item, rater) instead of the mean over raters");
  s_corr->add_option("--rater-kind", corr.rater_kind, "human or llm")->check(CLI::IsMember({"human", "llm"}));

  AgreeArgs agree;
  auto* s_agree = app.add_subcommand("agree", "Inter-annotator agreement and mean ratings");
  s_agree->add_option("--annotations", agree.annotations, "Likert annotations CSV")->required()->check(CLI::ExistingFile);

  RegressArgs reg;
  auto* s_reg = app.add_subcommand("regress", "OLS of BERTScore-F1 on document features");
  s_reg->add_option("--features", reg.features, "Feature table CSV")->check(CLI::ExistingFile);
  s_reg->add_option("--direction", reg.direction, "hDe-En or hEn-De")->required();
  s_reg->add_option("--base-year", reg.base_year, "Base year group");
  s_reg->add_option("--base-model", reg.base_model, "Base model id (default: first in sorted order)");
  s_reg->add_option("--sd", reg.sd, "sample or population")->check(CLI::IsMember({"sample", "population"}));
  s_reg->add_flag("--raw-response", reg.raw_response, "Do not standardize the response");
  s_reg->add_option("--corpus", reg.corpus, "Corpus JSONL (to assemble features)")->check(CLI::ExistingFile);
  s_reg->add_option("--embeddings", reg.embeddings, "Sentence embeddings JSONL")->check(CLI::ExistingFile);
  s_reg->add_option("--conllu", reg.conllu, "Dependency parses")->check(CLI::ExistingFile);
  s_reg->add_option("--scores", reg.scores, "Metric score CSV with BERTScore-F1 rows")->check(CLI::ExistingFile);
  s_reg->add_flag("--keep-case", reg.keep_case, "Do not lower-case tokens");
  s_reg->add_flag("--keep-punct", reg.keep_punct, "Keep punctuation tokens");

  AttackGenArgs gen;
  auto* s_gen = app.add_subcommand("attack-gen", "Generate omission or entity-swap cases, or register negation cases");
  s_gen->add_option("type", gen.type, "omission, swap or negation")
      ->required()
      ->check(CLI::IsMember({"omission", "swap", "negation"}));
  s_gen->add_option("--corpus", gen.corpus.corpus, "Corpus JSONL")->check(CLI::ExistingFile);
  s_gen->add_option("--direction", gen.corpus.direction, "Corpus direction");
  s_gen->add_option("--fraction", gen.fractions, "Drop fraction (repeatable)");
  s_gen->add_option("--docs", gen.docs, "Document ids")->delimiter(',');
  s_gen->add_flag("--select", gen.select, "Restrict to documents within the sentence-count range");
  s_gen->add_option("--min-sents", gen.min_sents, "Lower sentence bound for --select")->capture_default_str();
  s_gen->add_option("--max-sents", gen.max_sents, "Upper sentence bound for --select")->capture_default_str();
  s_gen->add_option("--sample", gen.sample, "Draw this many documents (seeded)");
  s_gen->add_option("--mapping", gen.mapping, "JSON {doc_id: [[from, to], ...]}")->check(CLI::ExistingFile);
  s_gen->add_option("--map", gen.maps, "FROM=TO applied to every selected document (repeatable)");
  s_gen->add_option("--cases", gen.cases, "Hand-written negation cases JSONL")->check(CLI::ExistingFile);

  AttackScoreArgs ascore;
  auto* s_ascore = app.add_subcommand("attack-score", "Attack accuracy per type and task, with Cohen's kappa");
  s_ascore->add_option("--cases", ascore.cases, "Attack cases JSONL")->required()->check(CLI::ExistingFile);
  s_ascore->add_option("--judgments", ascore.judgments, "Judgments CSV")->required()->check(CLI::ExistingFile);
  s_ascore->add_flag("--lenient-temperature", ascore.lenient, "Accept temperatures other than 0, 0.7 and 1");
  s_ascore->add_option("--kappa", ascore.kappa, "Two annotator ids")->delimiter(',');

  DecayArgs decay;
  auto* s_decay = app.add_subcommand("decay", "Similarity decay under sentence omission");
  s_decay->add_option("--summaries", decay.summaries, "JSONL {doc_id, fraction, summary}")->check(CLI::ExistingFile);
  s_decay->add_option("--scores", decay.scores, "Score CSV whose system_id is the drop fraction")->check(CLI::ExistingFile);
  s_decay->add_option("--lang", decay.lang, "Summary language for tokenization")->capture_default_str();
  s_decay->add_option("--ci", decay.ci, "documents or metrics")->check(CLI::IsMember({"documents", "metrics"}));
  s_decay->add_flag("--keep-case", decay.keep_case, "Do not lower-case tokens");
  s_decay->add_flag("--keep-punct", decay.keep_punct, "Keep punctuation tokens");

  SummarizeArgs summ;
  auto* s_summ = app.add_subcommand("summarize", "Query a chat model for summaries with wrong-language retries");
  add_corpus_args(s_summ, summ.corpus, false);
  s_summ->add_option("--kind", summ.kind, "e2e, e2e_title or pipeline")
      ->check(CLI::IsMember({"e2e", "e2e_title", "pipeline"}));
  s_summ->add_option("--model", summ.model, "Model name")->capture_default_str();
  s_summ->add_option("--system-id", summ.system_id, "System id for the outputs");
  s_summ->add_option("--temperature", summ.temperature, "Sampling temperature")->capture_default_str();
  s_summ->add_option("--max-rounds", summ.max_rounds, "Re-queries after a wrong-language output")->capture_default_str();
  s_summ->add_option("--budget", summ.budget, "Input word budget (default by source language)");
  s_summ->add_option("--extracted", summ.extracted, "JSONL {doc_id, indices} for retrieve-then-summarize")
      ->check(CLI::ExistingFile);
  s_summ->add_option("--cap", summ.cap, "Maximum extracted sentences")->capture_default_str();
  s_summ->add_option("--docs", summ.docs, "Document ids")->delimiter(',');
  s_summ->add_option("--limit", summ.limit, "Process at most this many documents");
  add_transport_args(s_summ, summ.transport);

  JudgeArgs judge;
  auto* s_judge = app.add_subcommand("judge", "Rate candidate summaries with a chat model");
  add_corpus_args(s_judge, judge.corpus, false);
  s_judge->add_option("--candidates", judge.candidates, "Candidate summaries JSONL")->required()->check(CLI::ExistingFile);
  s_judge->add_option("--model", judge.model, "Model name")->capture_default_str();
  s_judge->add_option("--temperature", judge.temperature, "Sampling temperature")->capture_default_str();
  add_transport_args(s_judge, judge.transport);

  MatchArgs match;
  auto* s_match = app.add_subcommand("match", "Pair documents with reference summaries by normalized title");
  s_match->add_option("--documents", match.documents, "JSONL {title, lang, ...}")->required()->check(CLI::ExistingFile);
  s_match->add_option("--wiki", match.wiki, "JSONL {title, summary}")->required()->check(CLI::ExistingFile);

  VerifyArgs verify;
  auto* s_verify = app.add_subcommand("verify", "Re-hash the inputs and outputs recorded in a manifest");
  s_verify->add_option("--manifest", verify.manifest, "manifest.json or a JSON report")->required()->check(CLI::ExistingFile);

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (s_stats->parsed()) cmd_stats(common, stats, err);
    else if (s_div->parsed()) cmd_divergence(common, div, err);
    else if (s_sim->parsed()) cmd_similarity(common, sim, err);
    else if (s_score->parsed()) cmd_score(common, score, err);
    else if (s_corr->parsed()) cmd_correlate(common, corr, err);
    else if (s_agree->parsed()) cmd_agree(common, agree, err);
    else if (s_reg->parsed()) cmd_regress(common, reg, err);
    else if (s_gen->parsed()) cmd_attack_gen(common, gen, err);
    else if (s_ascore->parsed()) cmd_attack_score(common, ascore, err);
    else if (s_decay->parsed()) cmd_decay(common, decay, err);
    else if (s_summ->parsed()) cmd_summarize(common, summ, err);
    else if (s_judge->parsed()) cmd_judge(common, judge, err);
    else if (s_match->parsed()) cmd_match(common, match, err);
    else if (s_verify->parsed()) return cmd_verify(verify, out);
    return 0;
  } catch (const TransportError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace clcts::cli
