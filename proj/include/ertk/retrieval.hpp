#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ertk/collection.hpp"
#include "ertk/corpus.hpp"
#include "ertk/erindex.hpp"

namespace ertk {

// Pair-key matching: STRICT requires the stored orientation, EITHER accepts
// both and keeps the better score.
enum class Orientation { Strict, Either };

enum class ScoreModel { LM, SDM };

struct SdmWeights {
  double term = 0.85;
  double ordered = 0.10;
  double unordered = 0.05;
};

struct ScoringConfig {
  ScoreModel model = ScoreModel::LM;
  double mu = 2000.0;  // Dirichlet pseudo-count
  SdmWeights sdm_weights;
  std::uint32_t unordered_window = 8;  // tokens, >= 2
  std::size_t candidate_depth = 100;   // top-N kept per sub-query
  // Collection-frequency floor for query terms the collection never saw;
  // keeps every log argument positive.
  double unseen_cf = 0.5;
  // Tuple score weights over the 2n-1 features; nullopt = uniform.
  std::optional<std::vector<double>> rerank_weights;

  // Throws std::invalid_argument on out-of-range values.
  void validate() const;
};

// A relational query split into normalized sub-queries: n entity slots and
// n-1 relationship slots between them.
struct RelationalQuery {
  std::string query_id;
  std::string nl_text;
  std::vector<std::vector<std::string>> entity_subqueries;
  std::vector<std::vector<std::string>> relationship_subqueries;
  Orientation orientation = Orientation::Either;
};

// Maps components positionally (1st, 3rd, ... are entity types; 2nd, 4th, ...
// relationship types) and normalizes terms exactly like corpus tokenization.
// Rejects even component counts, fewer than 3 components, and components
// that normalize to nothing.
RelationalQuery parse_query(const QueryRecord& record,
                            const TokenizerOptions& options = {});

struct RankEntry {
  UnitKey key;
  double score = 0.0;
};

struct SubqueryRanking {
  std::string slot;  // "E1", "R1,2", ...
  // Sorted by score descending, ties by key ascending; scores finite.
  std::vector<RankEntry> entries;
};

// Query-likelihood score of one group under Dirichlet smoothing:
// sum over q of log[(tf(q,G) + mu*cf(q)/|C|) / (|G| + mu)].
double score_group_lm(const GroupProfile& group,
                      const std::vector<std::string>& terms,
                      const CollectionStats& stats, double mu,
                      double unseen_cf = 0.5);

// Collection-wide counts for one adjacent query term pair: exact-adjacency
// ordered occurrences and unordered co-occurrences within the window. The
// ordered count is read from the stored bigram statistics; the unordered
// count is derived from postings positions. Windows never cross units.
struct BigramBackground {
  std::uint64_t ordered_cf = 0;
  std::uint64_t unordered_cf = 0;
};
std::vector<BigramBackground> sdm_backgrounds(
    const IndexPartition& partition, const std::vector<std::string>& terms,
    std::uint32_t unordered_window);

// Sequential-dependence score: lambda_T * f_T + lambda_O * f_O +
// lambda_U * f_U, each feature Dirichlet-smoothed. Single-term queries and
// lambda = (1,0,0) reduce exactly to score_group_lm. `backgrounds` must come
// from sdm_backgrounds over the same terms; pass nullptr to compute here.
double score_group_sdm(const IndexPartition& partition, const UnitKey& key,
                       const std::vector<std::string>& terms,
                       const ScoringConfig& config,
                       const std::vector<BigramBackground>* backgrounds =
                           nullptr);

// Stage 1: units matching any sub-query term, mapped to their group keys.
// Stage 2: every candidate group scored with the configured model over its
// full profile. Top candidate_depth groups, score descending, key ascending
// on ties.
SubqueryRanking retrieve_subquery(const IndexPartition& partition,
                                  std::string_view slot,
                                  const std::vector<std::string>& terms,
                                  const ScoringConfig& config);

struct TupleResult {
  std::vector<std::string> tuple;  // e1..en
  std::vector<double> features;    // 2n-1 sub-query scores, query order
  double score = 0.0;

  bool operator==(const TupleResult&) const = default;
};

// Intersection join: a tuple is emitted iff every entity appears in its
// entity ranking and every adjacent pair appears in the corresponding
// relationship ranking (orientation per query). Scores are the weighted
// feature sum; output sorted by score descending, then tuple ascending.
std::vector<TupleResult> join_tuples(
    const std::vector<SubqueryRanking>& entity_rankings,
    const std::vector<SubqueryRanking>& relationship_rankings,
    const RelationalQuery& query, const ScoringConfig& config);

// Recomputes combined scores with an explicit weight vector (length must
// equal the feature count) and re-sorts. Features are left untouched.
std::vector<TupleResult> rerank(std::vector<TupleResult> tuples,
                                const std::vector<double>& weights);

// Full pipeline for one query against a built index.
std::vector<TupleResult> answer_query(const ERIndex& index,
                                      const RelationalQuery& query,
                                      const ScoringConfig& config);

// TREC-style run lines: `<query_id> Q0 <e1|e2|...> <rank> <score> <tag>`.
void append_run_lines(std::string& out, const std::string& query_id,
                      const std::vector<TupleResult>& tuples,
                      std::string_view tag);

// LETOR-style feature lines: `<label> qid:<id> 1:<f1> ... k:<fk> # <tuple>`.
// Label 1 when the tuple exactly matches a judgment for this query, else 0.
void append_feature_lines(std::string& out, const std::string& query_id,
                          const std::vector<TupleResult>& tuples,
                          const std::vector<QrelRecord>& qrels);

}  // namespace ertk
