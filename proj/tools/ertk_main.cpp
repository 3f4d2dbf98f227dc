// Command-line front end: one binary, one subcommand per pipeline stage. The
// heavy lifting lives in the library so tests drive the same code paths; this
// file parses flags, applies the flags > config file > defaults precedence,
// prints summaries, and maps errors to exit codes (0 success, 1 invalid
// input, 2 usage or I/O).

#include <cstdio>
#include <exception>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ertk/kernels.hpp"
#include "ertk/pipeline.hpp"
#include "ertk/util.hpp"

namespace {

// Flag values holding overrides; a flag left unset defers to the config file
// or the built-in default. Each subcommand registers only the members it
// supports.
struct Overrides {
  std::optional<std::string> stopwords_path;
  std::optional<std::size_t> max_pair_separation;
  bool fail_fast = false;
  std::optional<std::string> model;
  std::optional<double> mu;
  std::optional<std::string> lambda;
  std::optional<std::uint32_t> window;
  std::optional<std::size_t> depth;
  std::optional<double> unseen_cf;
  std::optional<std::string> rerank;
  std::optional<std::string> orientation;
  std::optional<std::string> match_mode;
  std::optional<double> min_linked_ratio;
  std::optional<double> max_similarity;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> tag;
  std::optional<std::string> ks;
};

std::vector<double> parse_double_list(const std::string& text,
                                      const char* flag) {
  std::vector<double> out;
  for (const std::string& part : ertk::split(text, ',')) {
    std::size_t used = 0;
    try {
      out.push_back(std::stod(part, &used));
    } catch (const std::exception&) {
      used = std::string::npos;
    }
    if (used != part.size())
      throw ertk::FormatError(std::string(flag) + ": \"" + part +
                              "\" is not a number");
  }
  return out;
}

std::vector<std::size_t> parse_uint_list(const std::string& text,
                                         const char* flag) {
  std::vector<std::size_t> out;
  for (const std::string& part : ertk::split(text, ',')) {
    std::size_t used = 0;
    try {
      out.push_back(std::stoull(part, &used));
    } catch (const std::exception&) {
      used = std::string::npos;
    }
    if (used != part.size())
      throw ertk::FormatError(std::string(flag) + ": \"" + part +
                              "\" is not a non-negative integer");
  }
  return out;
}

// One stopword per line, already in normalized (lowercase) form.
std::vector<std::string> load_stopwords(const std::string& path) {
  std::vector<std::string> words;
  for (std::string line : ertk::split(ertk::read_file(path), '\n')) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' '))
      line.pop_back();
    if (!line.empty()) words.push_back(std::move(line));
  }
  return words;
}

// Defaults, then the config file, then explicit flags. Flags funnel through
// the same JSON field parser as config files, so a flag and its config key
// cannot drift apart.
ertk::EngineConfig effective_config(
    const std::optional<std::string>& config_path, const Overrides& flags,
    bool fail_fast_given) {
  ertk::EngineConfig config;
  if (config_path)
    ertk::apply_config_json(config, ertk::read_file(*config_path));

  nlohmann::json patch = nlohmann::json::object();
  if (fail_fast_given) patch["fail_fast"] = flags.fail_fast;
  if (flags.stopwords_path)
    patch["stopwords"] = load_stopwords(*flags.stopwords_path);
  if (flags.max_pair_separation)
    patch["max_pair_separation"] = *flags.max_pair_separation;
  if (flags.model) patch["model"] = *flags.model;
  if (flags.mu) patch["mu"] = *flags.mu;
  if (flags.lambda)
    patch["sdm_lambda"] = parse_double_list(*flags.lambda, "--lambda");
  if (flags.window) patch["unordered_window"] = *flags.window;
  if (flags.depth) patch["candidate_depth"] = *flags.depth;
  if (flags.unseen_cf) patch["unseen_cf"] = *flags.unseen_cf;
  if (flags.rerank)
    patch["rerank_weights"] = parse_double_list(*flags.rerank, "--rerank");
  if (flags.orientation) patch["orientation"] = *flags.orientation;
  if (flags.match_mode) patch["match_mode"] = *flags.match_mode;
  if (flags.min_linked_ratio)
    patch["min_linked_ratio"] = *flags.min_linked_ratio;
  if (flags.max_similarity)
    patch["max_title_similarity"] = *flags.max_similarity;
  if (flags.seed) patch["seed"] = *flags.seed;
  if (flags.tag) patch["run_tag"] = *flags.tag;
  if (flags.ks) patch["eval_ks"] = parse_uint_list(*flags.ks, "--k");
  ertk::apply_config_json(config, patch.dump());
  return config;
}

void apply_kernel(const std::string& name) {
  if (!ertk::kernels::select(name))
    std::fprintf(stderr, "warning: kernel \"%s\" unavailable, using %s\n",
                 name.c_str(), ertk::kernels::active().name);
}

// The message already carries its "line N:" prefix.
void warn_skipped(const std::vector<ertk::IngestError>& skipped) {
  for (const ertk::IngestError& e : skipped)
    std::fprintf(stderr, "warning: skipped record: %s\n", e.message.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"entity-relationship retrieval toolkit"};
  app.require_subcommand(1);

  std::string kernel = "auto";
  app.add_option("--kernel", kernel, "scoring kernel variant")
      ->check(CLI::IsMember({"auto", "scalar", "avx2", "neon"}));

  Overrides flags;
  std::optional<std::string> config_path;
  unsigned threads = 1;
  auto common = [&](CLI::App* cmd) {
    cmd->fallthrough();
    cmd->add_option("--config", config_path, "JSON config file");
    return cmd;
  };
  auto extraction_flags = [&](CLI::App* cmd) {
    cmd->add_option("--stopwords", flags.stopwords_path,
                    "stopword list, one normalized term per line");
    cmd->add_option("--max-pair-sep", flags.max_pair_separation,
                    "drop pairs separated by more tokens than this");
    cmd->add_option("--threads", threads, "worker threads")
        ->check(CLI::Range(1u, 1024u));
    return cmd;
  };

  // extract
  std::string corpus_path;
  std::string out_dir;
  CLI::App* extract = common(app.add_subcommand(
      "extract", "dump sentence-scoped extraction units from a corpus"));
  extract->add_option("--corpus", corpus_path, "annotated corpus (JSONL)")
      ->required();
  extract->add_option("--out", out_dir, "output directory")->required();
  auto* extract_ff = extract->add_flag("--fail-fast", flags.fail_fast,
                                       "stop at the first invalid record");
  extraction_flags(extract);
  extract->callback([&] {
    apply_kernel(kernel);
    ertk::EngineConfig config =
        effective_config(config_path, flags, extract_ff->count() > 0);
    ertk::ExtractSummary s = ertk::run_extract(
        corpus_path, out_dir, config, threads);
    warn_skipped(s.skipped);
    std::printf("documents\t%zu\nsentences\t%zu\nentity_units\t%zu\n"
                "pair_units\t%zu\nstraddling\t%zu\n",
                s.documents, s.sentences, s.entity_units, s.pair_units,
                s.straddling);
  });

  // index
  std::optional<std::string> index_corpus;
  std::optional<std::string> index_units;
  CLI::App* index = common(app.add_subcommand(
      "index", "build and persist the entity/pair indexes"));
  CLI::Option* opt_corpus =
      index->add_option("--corpus", index_corpus, "annotated corpus (JSONL)");
  CLI::Option* opt_units = index->add_option(
      "--units", index_units, "extraction dump from the extract command");
  opt_corpus->excludes(opt_units);
  auto* index_ff = index->add_flag("--fail-fast", flags.fail_fast,
                                   "stop at the first invalid record");
  index->add_option("--out", out_dir, "index directory")->required();
  extraction_flags(index);
  index->callback([&] {
    if (!index_corpus && !index_units)
      throw CLI::RequiredError("one of --corpus / --units");
    apply_kernel(kernel);
    ertk::EngineConfig config =
        effective_config(config_path, flags, index_ff->count() > 0);
    std::optional<std::filesystem::path> corpus;
    std::optional<std::filesystem::path> units;
    if (index_corpus) corpus = *index_corpus;
    if (index_units) units = *index_units;
    ertk::IndexSummary s =
        ertk::run_index(corpus, units, out_dir, config, threads);
    warn_skipped(s.skipped);
    std::printf("units\t%zu\nentity_groups\t%zu\npair_groups\t%zu\n"
                "units_hash\t%s\n",
                s.units, s.entity_groups, s.pair_groups,
                ertk::to_hex64(s.units_hash).c_str());
  });

  // search
  std::string index_dir;
  std::string queries_path;
  std::optional<std::string> qrels_path;
  CLI::App* search = common(app.add_subcommand(
      "search", "answer relational queries against an index"));
  search->add_option("--index", index_dir, "index directory")->required();
  search->add_option("--queries", queries_path, "query file (JSONL)")
      ->required();
  search->add_option("--qrels", qrels_path,
                     "judgments; also emit labeled feature vectors");
  search->add_option("--out", out_dir, "output directory")->required();
  search->add_option("--model", flags.model, "scoring model")
      ->check(CLI::IsMember({"lm", "sdm"}));
  search->add_option("--mu", flags.mu, "Dirichlet pseudo-count");
  search->add_option("--lambda", flags.lambda,
                     "SDM weights term,ordered,unordered");
  search->add_option("--window", flags.window, "unordered window in tokens");
  search->add_option("--depth", flags.depth, "candidates kept per sub-query");
  search->add_option("--unseen-cf", flags.unseen_cf,
                     "collection-frequency floor for unseen terms");
  search->add_option("--rerank", flags.rerank,
                     "tuple score weights, comma-separated");
  search->add_option("--orientation", flags.orientation,
                     "pair-key matching: strict or either")
      ->check(CLI::IsMember({"strict", "either"}));
  search->add_option("--tag", flags.tag, "run tag column");
  search->callback([&] {
    apply_kernel(kernel);
    ertk::EngineConfig config = effective_config(config_path, flags, false);
    std::optional<std::filesystem::path> qrels;
    if (qrels_path) qrels = *qrels_path;
    ertk::SearchSummary s =
        ertk::run_search(index_dir, queries_path, qrels, out_dir, config);
    std::printf("queries\t%zu\ntuples\t%zu\nempty_queries\t%zu\n", s.queries,
                s.tuples, s.empty_queries);
  });

  // eval
  std::string run_path;
  std::string eval_qrels;
  CLI::App* eval = common(app.add_subcommand(
      "eval", "score a run file against tuple judgments"));
  eval->add_option("--run", run_path, "run file")->required();
  eval->add_option("--qrels", eval_qrels, "judgments file")->required();
  eval->add_option("--out", out_dir, "output directory")->required();
  eval->add_option("--k", flags.ks, "cutoffs, comma-separated");
  eval->add_option("--match", flags.match_mode,
                   "tuple matching: ordered or unordered")
      ->check(CLI::IsMember({"ordered", "unordered"}));
  eval->callback([&] {
    ertk::EngineConfig config = effective_config(config_path, flags, false);
    ertk::EvalReport report =
        ertk::run_eval(run_path, eval_qrels, out_dir, config);
    if (!report.zero_qrel_queries.empty())
      std::fprintf(stderr, "warning: no judgments for query ids: %s\n",
                   ertk::join(report.zero_qrel_queries, ' ').c_str());
    std::fputs(ertk::metrics_tsv(report).c_str(), stdout);
  });

  // gen-collection
  std::string tables_dir;
  std::size_t target_count = 0;
  CLI::App* gen = common(app.add_subcommand(
      "gen-collection", "derive query stubs and judgments from tables"));
  gen->add_option("--tables", tables_dir, "directory of table JSON files")
      ->required();
  gen->add_option("--out", out_dir, "output directory")->required();
  gen->add_option("--target", target_count, "tables to sample")->required();
  gen->add_option("--seed", flags.seed, "sampling seed");
  gen->add_option("--max-similarity", flags.max_similarity,
                  "title Jaccard admission bound");
  gen->add_option("--min-linked-ratio", flags.min_linked_ratio,
                  "entity-link ratio required of participating columns");
  gen->callback([&] {
    ertk::EngineConfig config = effective_config(config_path, flags, false);
    ertk::GenCollectionSummary s =
        ertk::run_gen_collection(tables_dir, out_dir, target_count, config);
    if (s.admitted < target_count)
      std::fprintf(stderr,
                   "warning: requested %zu tables, admitted %zu "
                   "(candidates exhausted)\n",
                   target_count, s.admitted);
    std::printf("tables\t%zu\nadmitted\t%zu\nstubs\t%zu\nqrels\t%zu\n",
                s.tables_available, s.admitted, s.stubs, s.qrels);
  });

  // stats
  std::string stats_queries;
  std::string stats_qrels;
  std::optional<std::string> stats_out;
  CLI::App* stats = common(app.add_subcommand(
      "stats", "summarize a query collection"));
  stats->add_option("--queries", stats_queries, "query file (JSONL)")
      ->required();
  stats->add_option("--qrels", stats_qrels, "judgments file")->required();
  stats->add_option("--out", stats_out, "also write the report here");
  stats->callback([&] {
    ertk::EngineConfig config = effective_config(config_path, flags, false);
    std::optional<std::filesystem::path> out;
    if (stats_out) out = *stats_out;
    ertk::CollectionStatsReport report =
        ertk::run_stats(stats_queries, stats_qrels, out, config);
    std::fputs(ertk::stats_tsv(report).c_str(), stdout);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const ertk::IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
