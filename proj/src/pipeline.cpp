#include "ertk/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <utility>

#include "json.hpp"

#include "ertk/util.hpp"

namespace ertk {
namespace {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Enum names shared by config serialization and the CLI

std::string_view model_name(ScoreModel m) {
  return m == ScoreModel::LM ? "lm" : "sdm";
}

std::string_view orientation_name(Orientation o) {
  return o == Orientation::Strict ? "strict" : "either";
}

std::string_view match_mode_name(MatchMode m) {
  return m == MatchMode::Ordered ? "ordered" : "unordered";
}

ScoreModel parse_model(std::string_view s) {
  if (s == "lm") return ScoreModel::LM;
  if (s == "sdm") return ScoreModel::SDM;
  throw FormatError("unknown model \"" + std::string(s) + "\" (lm, sdm)");
}

Orientation parse_orientation(std::string_view s) {
  if (s == "strict") return Orientation::Strict;
  if (s == "either") return Orientation::Either;
  throw FormatError("unknown orientation \"" + std::string(s) +
                    "\" (strict, either)");
}

MatchMode parse_match_mode(std::string_view s) {
  if (s == "ordered") return MatchMode::Ordered;
  if (s == "unordered") return MatchMode::Unordered;
  throw FormatError("unknown match mode \"" + std::string(s) +
                    "\" (ordered, unordered)");
}

// ---------------------------------------------------------------------------
// Typed readers for config keys

double need_double(const json& v, const char* key) {
  if (!v.is_number()) throw FormatError(std::string(key) + " must be a number");
  return v.get<double>();
}

std::uint64_t need_uint(const json& v, const char* key) {
  if (!v.is_number_unsigned())
    throw FormatError(std::string(key) + " must be a non-negative integer");
  return v.get<std::uint64_t>();
}

std::string need_string(const json& v, const char* key) {
  if (!v.is_string()) throw FormatError(std::string(key) + " must be a string");
  return v.get<std::string>();
}

bool need_bool(const json& v, const char* key) {
  if (!v.is_boolean()) throw FormatError(std::string(key) + " must be a bool");
  return v.get<bool>();
}

std::vector<double> need_doubles(const json& v, const char* key) {
  if (!v.is_array())
    throw FormatError(std::string(key) + " must be an array of numbers");
  std::vector<double> out;
  for (const json& e : v) out.push_back(need_double(e, key));
  return out;
}

void write_effective_config(const std::filesystem::path& dir,
                            std::string_view command, json inputs,
                            json parameters, const EngineConfig& config) {
  json doc;
  doc["command"] = std::string(command);
  doc["config"] = json::parse(engine_config_json(config));
  doc["inputs"] = std::move(inputs);
  if (!parameters.is_null()) doc["parameters"] = std::move(parameters);
  write_file(dir / "effective_config.json", doc.dump(2) + "\n");
}

std::string qrels_line(const QrelRecord& qrel) {
  return qrel.query_id + " 0 " + join(qrel.tuple, '|') + " 1\n";
}

std::string stub_json(const QueryRecord& stub) {
  json rec;
  rec["query_id"] = stub.query_id;
  rec["nl_text"] = stub.nl_text;
  rec["components"] = stub.components;
  rec["source_table"] = stub.source_table;
  return rec.dump();
}

}  // namespace

void EngineConfig::validate() const {
  scoring.validate();
  auto ratio = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0))
      throw std::invalid_argument(std::string(name) + " must be in [0, 1]");
  };
  ratio(min_linked_ratio, "min_linked_ratio");
  ratio(max_title_similarity, "max_title_similarity");
  if (run_tag.empty() ||
      run_tag.find_first_of(" \t\r\n") != std::string::npos)
    throw std::invalid_argument("run_tag must be non-empty without whitespace");
  if (eval_ks.empty())
    throw std::invalid_argument("eval_ks must name at least one cutoff");
}

std::string engine_config_json(const EngineConfig& config) {
  json j;
  j["fail_fast"] = config.ingest.fail_fast;
  std::vector<std::string> stopwords(
      config.index.extraction.tokenizer.stopwords.begin(),
      config.index.extraction.tokenizer.stopwords.end());
  std::sort(stopwords.begin(), stopwords.end());
  j["stopwords"] = stopwords;
  if (config.index.extraction.max_pair_separation)
    j["max_pair_separation"] = *config.index.extraction.max_pair_separation;
  else
    j["max_pair_separation"] = nullptr;
  j["model"] = model_name(config.scoring.model);
  j["mu"] = config.scoring.mu;
  j["sdm_lambda"] = {config.scoring.sdm_weights.term,
                     config.scoring.sdm_weights.ordered,
                     config.scoring.sdm_weights.unordered};
  j["unordered_window"] = config.scoring.unordered_window;
  j["candidate_depth"] = config.scoring.candidate_depth;
  j["unseen_cf"] = config.scoring.unseen_cf;
  if (config.scoring.rerank_weights)
    j["rerank_weights"] = *config.scoring.rerank_weights;
  else
    j["rerank_weights"] = nullptr;
  j["orientation"] = orientation_name(config.orientation);
  j["match_mode"] = match_mode_name(config.match_mode);
  j["key_column"] = {{"min_unique_ratio", config.key_column.min_unique_ratio},
                     {"min_avg_length", config.key_column.min_avg_length},
                     {"max_avg_length", config.key_column.max_avg_length},
                     {"min_nonempty_ratio", config.key_column.min_nonempty_ratio}};
  j["min_linked_ratio"] = config.min_linked_ratio;
  j["max_title_similarity"] = config.max_title_similarity;
  j["seed"] = config.seed;
  j["run_tag"] = config.run_tag;
  j["eval_ks"] = config.eval_ks;
  return j.dump(2);
}

void apply_config_json(EngineConfig& config, std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("invalid config JSON: ") + e.what());
  }
  if (!doc.is_object()) throw FormatError("config must be a JSON object");

  for (const auto& [key, value] : doc.items()) {
    if (key == "fail_fast") {
      config.ingest.fail_fast = need_bool(value, "fail_fast");
    } else if (key == "stopwords") {
      if (!value.is_array())
        throw FormatError("stopwords must be an array of strings");
      config.index.extraction.tokenizer.stopwords.clear();
      for (const json& w : value)
        config.index.extraction.tokenizer.stopwords.insert(
            need_string(w, "stopwords"));
    } else if (key == "max_pair_separation") {
      if (value.is_null())
        config.index.extraction.max_pair_separation.reset();
      else
        config.index.extraction.max_pair_separation =
            need_uint(value, "max_pair_separation");
    } else if (key == "model") {
      config.scoring.model = parse_model(need_string(value, "model"));
    } else if (key == "mu") {
      config.scoring.mu = need_double(value, "mu");
    } else if (key == "sdm_lambda") {
      std::vector<double> w = need_doubles(value, "sdm_lambda");
      if (w.size() != 3)
        throw FormatError("sdm_lambda needs exactly 3 weights");
      config.scoring.sdm_weights = {w[0], w[1], w[2]};
    } else if (key == "unordered_window") {
      config.scoring.unordered_window =
          static_cast<std::uint32_t>(need_uint(value, "unordered_window"));
    } else if (key == "candidate_depth") {
      config.scoring.candidate_depth =
          static_cast<std::size_t>(need_uint(value, "candidate_depth"));
    } else if (key == "unseen_cf") {
      config.scoring.unseen_cf = need_double(value, "unseen_cf");
    } else if (key == "rerank_weights") {
      if (value.is_null())
        config.scoring.rerank_weights.reset();
      else
        config.scoring.rerank_weights = need_doubles(value, "rerank_weights");
    } else if (key == "orientation") {
      config.orientation = parse_orientation(need_string(value, "orientation"));
    } else if (key == "match_mode") {
      config.match_mode = parse_match_mode(need_string(value, "match_mode"));
    } else if (key == "key_column") {
      if (!value.is_object()) throw FormatError("key_column must be an object");
      for (const auto& [tkey, tval] : value.items()) {
        if (tkey == "min_unique_ratio")
          config.key_column.min_unique_ratio = need_double(tval, tkey.c_str());
        else if (tkey == "min_avg_length")
          config.key_column.min_avg_length = need_double(tval, tkey.c_str());
        else if (tkey == "max_avg_length")
          config.key_column.max_avg_length = need_double(tval, tkey.c_str());
        else if (tkey == "min_nonempty_ratio")
          config.key_column.min_nonempty_ratio =
              need_double(tval, tkey.c_str());
        else
          throw FormatError("unknown key_column key \"" + tkey + "\"");
      }
    } else if (key == "min_linked_ratio") {
      config.min_linked_ratio = need_double(value, "min_linked_ratio");
    } else if (key == "max_title_similarity") {
      config.max_title_similarity =
          need_double(value, "max_title_similarity");
    } else if (key == "seed") {
      config.seed = need_uint(value, "seed");
    } else if (key == "run_tag") {
      config.run_tag = need_string(value, "run_tag");
    } else if (key == "eval_ks") {
      if (!value.is_array())
        throw FormatError("eval_ks must be an array of integers");
      config.eval_ks.clear();
      for (const json& k : value)
        config.eval_ks.push_back(
            static_cast<std::size_t>(need_uint(k, "eval_ks")));
    } else {
      throw FormatError("unknown config key \"" + key + "\"");
    }
  }
}

EngineConfig parse_engine_config(std::string_view text) {
  EngineConfig config;
  apply_config_json(config, text);
  return config;
}

CorpusExtraction extract_corpus(const std::filesystem::path& corpus_path,
                                const EngineConfig& config, unsigned threads) {
  CorpusExtraction out;
  std::vector<AnnotatedDocument> docs =
      load_corpus(corpus_path, config.ingest, &out.ingest);
  std::vector<ExtractionResult> results(docs.size());

  std::size_t workers = std::max<unsigned>(threads, 1);
  workers = std::min(workers, std::max<std::size_t>(docs.size(), 1));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    try {
      for (std::size_t i; (i = next.fetch_add(1)) < docs.size();)
        results[i] = extract_document(docs[i], config.index.extraction);
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < workers; ++i) pool.emplace_back(work);
  work();
  for (std::thread& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  out.documents = docs.size();
  for (ExtractionResult& r : results) {
    out.sentences += r.sentences;
    out.straddling += r.straddling;
    out.units.insert(out.units.end(),
                     std::make_move_iterator(r.units.begin()),
                     std::make_move_iterator(r.units.end()));
  }
  return out;
}

ExtractSummary run_extract(const std::filesystem::path& corpus_path,
                           const std::filesystem::path& out_dir,
                           const EngineConfig& config, unsigned threads) {
  config.validate();
  CorpusExtraction ex = extract_corpus(corpus_path, config, threads);

  ExtractSummary summary;
  summary.documents = ex.documents;
  summary.sentences = ex.sentences;
  summary.straddling = ex.straddling;
  summary.skipped = std::move(ex.ingest.errors);
  for (const ExtractionUnit& u : ex.units)
    (u.kind == UnitKind::Entity ? summary.entity_units : summary.pair_units)++;

  std::filesystem::create_directories(out_dir);
  write_units_jsonl(out_dir / "units.jsonl", ex.units);
  write_effective_config(out_dir, "extract",
                         {{"corpus", corpus_path.string()}}, nullptr, config);
  return summary;
}

IndexSummary run_index(const std::optional<std::filesystem::path>& corpus_path,
                       const std::optional<std::filesystem::path>& units_path,
                       const std::filesystem::path& index_dir,
                       const EngineConfig& config, unsigned threads) {
  if (corpus_path.has_value() == units_path.has_value())
    throw std::invalid_argument(
        "exactly one of corpus and units must be given");
  config.validate();

  IndexSummary summary;
  json inputs;
  ERIndex index;
  if (corpus_path) {
    CorpusExtraction ex = extract_corpus(*corpus_path, config, threads);
    summary.documents = ex.documents;
    summary.skipped = std::move(ex.ingest.errors);
    index = build_index(ex.units, config.index);
    inputs["corpus"] = corpus_path->string();
  } else {
    index = build_index(read_units_jsonl(*units_path), config.index);
    inputs["units"] = units_path->string();
  }

  std::filesystem::create_directories(index_dir);
  save_index(index, index_dir);
  write_effective_config(index_dir, "index", std::move(inputs), nullptr,
                         config);

  summary.units = index.entity.units.size() + index.pair.units.size();
  summary.entity_groups = index.entity.groups.size();
  summary.pair_groups = index.pair.groups.size();
  summary.units_hash = index.units_hash;
  return summary;
}

SearchSummary run_search(const std::filesystem::path& index_dir,
                         const std::filesystem::path& queries_path,
                         const std::optional<std::filesystem::path>& qrels_path,
                         const std::filesystem::path& out_dir,
                         const EngineConfig& config) {
  config.validate();
  ERIndex index = load_index(index_dir);
  std::vector<QueryRecord> queries = load_queries(queries_path);
  std::vector<QrelRecord> qrels;
  if (qrels_path) qrels = load_qrels(*qrels_path);

  SearchSummary summary;
  summary.queries = queries.size();
  std::string run_text;
  std::string feature_text;
  for (const QueryRecord& record : queries) {
    RelationalQuery query =
        parse_query(record, index.config.extraction.tokenizer);
    query.orientation = config.orientation;
    std::vector<TupleResult> tuples =
        answer_query(index, query, config.scoring);
    if (tuples.empty()) ++summary.empty_queries;
    summary.tuples += tuples.size();
    append_run_lines(run_text, record.query_id, tuples, config.run_tag);
    if (qrels_path)
      append_feature_lines(feature_text, record.query_id, tuples, qrels);
  }

  std::filesystem::create_directories(out_dir);
  write_file(out_dir / "run.txt", run_text);
  json inputs = {{"index", index_dir.string()},
                 {"queries", queries_path.string()}};
  if (qrels_path) {
    write_file(out_dir / "features.txt", feature_text);
    summary.wrote_features = true;
    inputs["qrels"] = qrels_path->string();
  }
  write_effective_config(out_dir, "search", std::move(inputs), nullptr,
                         config);
  return summary;
}

EvalReport run_eval(const std::filesystem::path& run_path,
                    const std::filesystem::path& qrels_path,
                    const std::filesystem::path& out_dir,
                    const EngineConfig& config) {
  config.validate();
  std::vector<RunEntry> run = load_run(run_path);
  std::vector<QrelRecord> qrels = load_qrels(qrels_path);
  EvalReport report = evaluate(run, qrels, config.eval_ks, config.match_mode);

  std::filesystem::create_directories(out_dir);
  write_file(out_dir / "metrics.tsv", metrics_tsv(report));
  write_effective_config(
      out_dir, "eval",
      {{"run", run_path.string()}, {"qrels", qrels_path.string()}}, nullptr,
      config);
  return report;
}

GenCollectionSummary run_gen_collection(
    const std::filesystem::path& tables_dir,
    const std::filesystem::path& out_dir, std::size_t target_count,
    const EngineConfig& config) {
  config.validate();
  std::vector<SourceTable> tables = load_tables_dir(tables_dir);
  std::vector<std::size_t> picks = stratified_sample(
      tables, target_count, config.max_title_similarity, config.seed);

  GenCollectionSummary summary;
  summary.tables_available = tables.size();
  summary.admitted = picks.size();

  std::string stubs_text;
  std::string qrels_text;
  for (std::size_t pick : picks) {
    const SourceTable& table = tables[pick];
    TableOutcome outcome;
    outcome.table_id = table.table_id;
    outcome.topic_area = table.topic_area;

    std::optional<std::size_t> key =
        detect_key_column(table, config.key_column);
    if (!key || table.columns[*key].header.empty()) {
      outcome.status = "no_key_column";
      summary.outcomes.push_back(std::move(outcome));
      continue;
    }
    outcome.key_header = table.columns[*key].header;

    // Leftmost one or two non-key columns that are linked well enough to
    // survive the row filter and carry a header the editor can start from.
    std::vector<std::size_t> value_cols;
    for (std::size_t c = 0; c < table.columns.size() && value_cols.size() < 2;
         ++c) {
      if (c == *key || table.columns[c].header.empty()) continue;
      if (table.columns[c].cells_linked_ratio >= config.min_linked_ratio)
        value_cols.push_back(c);
    }
    if (value_cols.empty()) {
      outcome.status = "no_linked_value_column";
      summary.outcomes.push_back(std::move(outcome));
      continue;
    }
    for (std::size_t c : value_cols)
      outcome.value_headers.push_back(table.columns[c].header);

    JudgmentResult judgments;
    try {
      judgments = generate_judgments(table, *key, value_cols,
                                     config.min_linked_ratio);
    } catch (const FormatError&) {
      // The key column itself is under-linked; the table yields no stub.
      outcome.status = "generation_refused";
      summary.outcomes.push_back(std::move(outcome));
      continue;
    }

    outcome.status = "ok";
    outcome.qrels = judgments.qrels.size();
    outcome.skipped_rows = judgments.skipped_rows;
    stubs_text += stub_json(judgments.stub) + "\n";
    for (const QrelRecord& qrel : judgments.qrels) qrels_text += qrels_line(qrel);
    ++summary.stubs;
    summary.qrels += judgments.qrels.size();
    summary.outcomes.push_back(std::move(outcome));
  }

  std::string report_text =
      "order\ttable_id\ttopic_area\tstatus\tkey_column\tvalue_columns\tqrels"
      "\tskipped_rows\n";
  for (std::size_t i = 0; i < summary.outcomes.size(); ++i) {
    const TableOutcome& o = summary.outcomes[i];
    report_text += std::to_string(i + 1) + "\t" + o.table_id + "\t" +
                   o.topic_area + "\t" + o.status + "\t" + o.key_header +
                   "\t" + join(o.value_headers, '|') + "\t" +
                   std::to_string(o.qrels) + "\t" +
                   std::to_string(o.skipped_rows) + "\n";
  }

  std::filesystem::create_directories(out_dir);
  write_file(out_dir / "stubs.jsonl", stubs_text);
  write_file(out_dir / "qrels.txt", qrels_text);
  write_file(out_dir / "report.tsv", report_text);
  write_effective_config(out_dir, "gen-collection",
                         {{"tables", tables_dir.string()}},
                         {{"target_count", target_count}}, config);
  return summary;
}

CollectionStatsReport run_stats(
    const std::filesystem::path& queries_path,
    const std::filesystem::path& qrels_path,
    const std::optional<std::filesystem::path>& out_dir,
    const EngineConfig& config) {
  auto [queries, qrels] = load_qc(queries_path, qrels_path);
  CollectionStatsReport report = collection_stats(queries, qrels);
  if (out_dir) {
    std::filesystem::create_directories(*out_dir);
    write_file(*out_dir / "report.tsv", stats_tsv(report));
    write_effective_config(
        *out_dir, "stats",
        {{"queries", queries_path.string()}, {"qrels", qrels_path.string()}},
        nullptr, config);
  }
  return report;
}

std::string stats_tsv(const CollectionStatsReport& report) {
  std::string out;
  auto count = [&](std::string_view name, std::size_t v) {
    out += std::string(name) + "\t" + std::to_string(v) + "\n";
  };
  auto value = [&](std::string_view name, double v) {
    out += std::string(name) + "\t" + format_double(v, 4) + "\n";
  };
  count("total_queries", report.total_queries);
  count("pair_queries", report.pair_queries);
  count("triple_queries", report.triple_queries);
  value("avg_nl_length_all", report.avg_nl_length_all);
  value("avg_nl_length_pair", report.avg_nl_length_pair);
  value("avg_nl_length_triple", report.avg_nl_length_triple);
  value("avg_entity_component_length", report.avg_entity_component_length);
  value("avg_relationship_component_length",
        report.avg_relationship_component_length);
  count("unique_entity_types", report.unique_entity_types);
  count("unique_relationship_types", report.unique_relationship_types);
  value("avg_judgments_all", report.avg_judgments_all);
  value("avg_judgments_pair", report.avg_judgments_pair);
  value("avg_judgments_triple", report.avg_judgments_triple);
  return out;
}

}  // namespace ertk
