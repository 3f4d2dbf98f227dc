#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ertk/collection.hpp"

namespace ertk {

struct RunEntry {
  std::string query_id;
  std::vector<std::string> tuple;
  std::size_t rank = 0;  // 1-based; re-derived from scores before metrics
  double score = 0.0;
  std::string tag;
};

// Parses TREC-style run lines `<query_id> Q0 <e1|e2|...> <rank> <score>
// <tag>` with line-numbered errors.
std::vector<RunEntry> load_run(const std::filesystem::path& path);

enum class MatchMode { Ordered, Unordered };

// ORDERED compares positionally; UNORDERED compares as sets. Arity mismatch
// never matches.
bool match_tuple(const std::vector<std::string>& run_tuple,
                 const std::vector<std::string>& qrel_tuple, MatchMode mode);

struct QueryMetrics {
  std::string query_id;
  std::size_t relevant_total = 0;  // judged tuples for the query
  std::size_t retrieved = 0;
  double ap = 0.0;
  std::map<std::size_t, double> precision_at;
  std::map<std::size_t, double> ndcg_at;
  std::map<std::size_t, double> recall_at;
};

struct EvalReport {
  // Queries from the run that have judgments, sorted by query id.
  std::vector<QueryMetrics> per_query;
  // Run queries without judgments: excluded from all means.
  std::vector<std::string> zero_qrel_queries;
  double map = 0.0;
  std::map<std::size_t, double> mean_precision_at;
  std::map<std::size_t, double> mean_ndcg_at;
  std::map<std::size_t, double> mean_recall_at;
};

// Binary-relevance evaluation. Ranks are re-derived per query by stable
// sort on score descending, so any positive monotone rescoring leaves metrics
// unchanged. Each judgment credits at most one run tuple (first match in rank
// order; only UNORDERED can tie several run tuples to one judgment).
// Duplicate tuples within one query's run are a validation error.
EvalReport evaluate(const std::vector<RunEntry>& run,
                    const std::vector<QrelRecord>& qrels,
                    const std::vector<std::size_t>& k_values,
                    MatchMode mode = MatchMode::Ordered);

// Diff-friendly TSV: `metric<TAB>query_id or "all"<TAB>value` with a fixed
// row order (counts, AP rows then MAP, then P@k/NDCG@k/Recall@k per k).
std::string metrics_tsv(const EvalReport& report);

}  // namespace ertk
