#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ertk/collection.hpp"
#include "ertk/corpus.hpp"
#include "ertk/erindex.hpp"
#include "ertk/evaluation.hpp"
#include "ertk/extraction.hpp"
#include "ertk/retrieval.hpp"

namespace ertk {

// Everything a pipeline run depends on besides its input files and the thread
// count. Thread count is deliberately excluded: outputs must not depend on it,
// so it never appears in effective_config.json.
struct EngineConfig {
  IngestConfig ingest;
  IndexConfig index;
  ScoringConfig scoring;
  Orientation orientation = Orientation::Either;
  MatchMode match_mode = MatchMode::Ordered;
  KeyColumnThresholds key_column;
  double min_linked_ratio = 0.8;
  double max_title_similarity = 0.7;
  std::uint64_t seed = 1;
  std::string run_tag = "ertk";
  std::vector<std::size_t> eval_ks = {5, 10, 20, 100};

  // Delegates to ScoringConfig::validate and checks the generator ratios and
  // the run tag (whitespace would corrupt run-file columns).
  void validate() const;
};

// Serializes every field as one flat sorted-key JSON object. Reruns of the
// same config produce identical bytes.
std::string engine_config_json(const EngineConfig& config);

// Applies the keys present in a JSON object onto `config`, leaving absent
// fields alone. Unknown keys are rejected so a typo cannot silently fall back
// to a default. This is the config-file half of the flags > file > defaults
// precedence: callers overlay the file first, then explicit flags.
void apply_config_json(EngineConfig& config, std::string_view text);

// Defaults + apply_config_json; inverse of engine_config_json.
EngineConfig parse_engine_config(std::string_view text);

// ---------------------------------------------------------------------------
// Corpus extraction shared by the extract and index commands

struct CorpusExtraction {
  // Concatenated per-document units in corpus file order.
  std::vector<ExtractionUnit> units;
  std::size_t documents = 0;
  std::size_t sentences = 0;
  std::size_t straddling = 0;
  IngestReport ingest;
};

// Extracts every document using `threads` workers. Documents are independent,
// so workers fill per-document slots and the merge happens in file order:
// output is identical for any thread count.
CorpusExtraction extract_corpus(const std::filesystem::path& corpus_path,
                                const EngineConfig& config, unsigned threads);

// ---------------------------------------------------------------------------
// Commands. Each writes its outputs plus an effective_config.json into the
// given directory (created if missing) and returns a summary for the caller
// to print. Errors propagate: FormatError / std::invalid_argument for invalid
// inputs, IoError for unreadable or unwritable paths.

struct ExtractSummary {
  std::size_t documents = 0;
  std::size_t sentences = 0;
  std::size_t entity_units = 0;
  std::size_t pair_units = 0;
  std::size_t straddling = 0;
  // Skipped-record diagnostics when ingest.fail_fast is off.
  std::vector<IngestError> skipped;
};

// corpus -> out_dir/units.jsonl
ExtractSummary run_extract(const std::filesystem::path& corpus_path,
                           const std::filesystem::path& out_dir,
                           const EngineConfig& config, unsigned threads = 1);

struct IndexSummary {
  std::size_t documents = 0;  // zero when indexing a unit dump
  std::size_t units = 0;
  std::size_t entity_groups = 0;
  std::size_t pair_groups = 0;
  std::uint64_t units_hash = 0;
  std::vector<IngestError> skipped;
};

// Builds from a corpus (ingest + extract) or from an extraction dump, then
// persists. Exactly one of corpus_path / units_path must be set.
IndexSummary run_index(const std::optional<std::filesystem::path>& corpus_path,
                       const std::optional<std::filesystem::path>& units_path,
                       const std::filesystem::path& index_dir,
                       const EngineConfig& config, unsigned threads = 1);

struct SearchSummary {
  std::size_t queries = 0;
  std::size_t tuples = 0;
  std::size_t empty_queries = 0;  // queries whose join produced nothing
  bool wrote_features = false;
};

// index + query file -> out_dir/run.txt, plus out_dir/features.txt when a
// qrels path supplies labels. Query terms are normalized with the tokenizer
// stored in the index manifest, not the search-time config, so query and
// corpus normalization can never diverge.
SearchSummary run_search(const std::filesystem::path& index_dir,
                         const std::filesystem::path& queries_path,
                         const std::optional<std::filesystem::path>& qrels_path,
                         const std::filesystem::path& out_dir,
                         const EngineConfig& config);

// run + qrels -> out_dir/metrics.tsv. Queries present in only one of the two
// files surface in the report (zero_qrel_queries); they are a warning, not an
// error.
EvalReport run_eval(const std::filesystem::path& run_path,
                    const std::filesystem::path& qrels_path,
                    const std::filesystem::path& out_dir,
                    const EngineConfig& config);

// One admitted table's fate in the generation report.
struct TableOutcome {
  std::string table_id;
  std::string topic_area;
  // "ok", or why no stub came out: "no_key_column", "no_linked_value_column",
  // "generation_refused".
  std::string status;
  std::string key_header;
  std::vector<std::string> value_headers;
  std::size_t qrels = 0;
  std::size_t skipped_rows = 0;
};

struct GenCollectionSummary {
  std::size_t tables_available = 0;
  std::size_t admitted = 0;
  std::size_t stubs = 0;
  std::size_t qrels = 0;
  std::vector<TableOutcome> outcomes;  // admission order
};

// tables dir -> out_dir/{stubs.jsonl, qrels.txt, report.tsv}. Stubs are
// editor templates (empty nl_text and relationship slots), one per admitted
// table that passes key-column detection and linked-ratio checks. Value
// columns are the leftmost one or two non-key columns whose linked ratio
// meets min_linked_ratio.
GenCollectionSummary run_gen_collection(
    const std::filesystem::path& tables_dir,
    const std::filesystem::path& out_dir, std::size_t target_count,
    const EngineConfig& config);

// queries + qrels -> statistics report; cross-checks qrels against queries.
// When out_dir is set, also writes report.tsv and effective_config.json.
CollectionStatsReport run_stats(
    const std::filesystem::path& queries_path,
    const std::filesystem::path& qrels_path,
    const std::optional<std::filesystem::path>& out_dir,
    const EngineConfig& config);

// `metric<TAB>value` lines in declaration order, doubles with 4 decimals.
std::string stats_tsv(const CollectionStatsReport& report);

}  // namespace ertk
