#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ertk {

// ---------------------------------------------------------------------------
// Relational tables (normalized JSON form; HTML extraction happens upstream)

struct Cell {
  std::string text;
  std::optional<std::string> entity;  // non-empty when present
};

struct ColumnSpec {
  std::string header;
  // Fraction of non-empty cells carrying an entity link; recomputed from the
  // rows at parse time, so it is consistent by construction.
  double cells_linked_ratio = 0.0;
};

struct SourceTable {
  std::string table_id;
  std::string page_title;
  std::string topic_area;
  std::string section_title;
  std::string intro_text;
  std::vector<ColumnSpec> columns;
  std::vector<std::vector<Cell>> rows;  // each row has exactly |columns| cells
};

// One table per JSON document. Unknown fields are ignored; section_title and
// intro_text default to empty.
SourceTable parse_table_json(std::string_view text);

// Loads every *.json in the directory in filename order. Duplicate table ids
// are rejected.
std::vector<SourceTable> load_tables_dir(const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Key-column detection

struct KeyColumnThresholds {
  double min_unique_ratio = 0.8;  // distinct / non-empty
  double min_avg_length = 3.0;    // code points, averaged over non-empty cells
  double max_avg_length = 200.0;
  double min_nonempty_ratio = 0.9;
};

// Leftmost column that looks like the table's subject: mostly unique,
// mostly non-empty, sensible text length. nullopt when no column qualifies
// or the table is degenerate (fewer than 2 columns or 2 rows).
std::optional<std::size_t> detect_key_column(
    const SourceTable& table, const KeyColumnThresholds& thresholds = {});

// ---------------------------------------------------------------------------
// Queries and judgments

struct QueryRecord {
  std::string query_id;
  std::string nl_text;
  // Alternating entity and relationship types: odd positions (1st, 3rd, ...)
  // are entity types, even positions relationship types. Odd count, >= 3.
  std::vector<std::string> components;
  std::string source_table;  // empty when unknown
};

// Number of entities a query's tuples must have.
inline std::size_t query_arity(const QueryRecord& q) {
  return (q.components.size() + 1) / 2;
}

struct QrelRecord {
  std::string query_id;
  std::vector<std::string> tuple;  // ordered entity ids, key column first
};

struct JudgmentResult {
  // Editor template: column headers as provisional entity types, empty
  // nl_text and relationship slots. Not loadable as-is; editors fill it in.
  QueryRecord stub;
  std::vector<QrelRecord> qrels;
  std::size_t skipped_rows = 0;  // rows with any unlinked participating cell
};

// Emits one judgment tuple per fully linked row, key column first. Columns
// must carry entity links on at least min_linked_ratio of their non-empty
// cells or generation is refused.
JudgmentResult generate_judgments(const SourceTable& table,
                                  std::size_t key_col,
                                  const std::vector<std::size_t>& other_cols,
                                  double min_linked_ratio = 0.8);

// ---------------------------------------------------------------------------
// Sampling

// Jaccard similarity of the title token sets (normalized as corpus text).
// Both empty -> 0.
double jaccard_title_similarity(std::string_view title_a,
                                std::string_view title_b);

// Deterministic stratified selection: round-robin over topic areas in sorted
// order, each turn consuming one candidate from that area's seeded-shuffle
// order; a candidate is admitted only if its page title stays strictly below
// max_similarity against every already-admitted title. Returns indices into
// `tables` in admission order; fewer than target_count when candidates run
// out.
std::vector<std::size_t> stratified_sample(
    const std::vector<SourceTable>& tables, std::size_t target_count,
    double max_similarity, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Query-collection files

// JSONL records {query_id, nl_text, components, source_table?}. Validates
// component arity (odd, >= 3), the RELink_P_/RELink_T_ id schemes (3 and 5
// components), and rejects duplicate query ids.
std::vector<QueryRecord> load_queries(const std::filesystem::path& path);

// Whitespace-separated `<query_id> 0 <e1|e2|...> <label>` lines. Lines with
// label 0 are dropped; duplicate (query, tuple) pairs are rejected.
std::vector<QrelRecord> load_qrels(const std::filesystem::path& path);

// Loads both files and cross-checks: every qrel references a known query and
// matches its arity.
std::pair<std::vector<QueryRecord>, std::vector<QrelRecord>> load_qc(
    const std::filesystem::path& queries_path,
    const std::filesystem::path& qrels_path);

// ---------------------------------------------------------------------------
// Statistics

struct CollectionStatsReport {
  std::size_t total_queries = 0;
  std::size_t pair_queries = 0;    // 3 components
  std::size_t triple_queries = 0;  // 5 components
  // Lengths are code points, averaged over the relevant query class.
  double avg_nl_length_all = 0.0;
  double avg_nl_length_pair = 0.0;
  double avg_nl_length_triple = 0.0;
  double avg_entity_component_length = 0.0;
  double avg_relationship_component_length = 0.0;
  std::size_t unique_entity_types = 0;        // after normalization
  std::size_t unique_relationship_types = 0;  // after normalization
  double avg_judgments_all = 0.0;
  double avg_judgments_pair = 0.0;
  double avg_judgments_triple = 0.0;
};

CollectionStatsReport collection_stats(const std::vector<QueryRecord>& queries,
                                       const std::vector<QrelRecord>& qrels);

}  // namespace ertk
