#include "ertk/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <utility>

#include "ertk/kernels.hpp"
#include "ertk/util.hpp"

namespace ertk {
namespace {

// Smoothed background mass mu * cf/|C| shared by every scoring path, so the
// batched and one-group-at-a-time paths round identically.
double background_mass(double mu, std::uint64_t cf, double unseen_cf,
                       std::uint64_t total) {
  const double effective = cf == 0 ? unseen_cf : static_cast<double>(cf);
  const double denom = total == 0 ? 1.0 : static_cast<double>(total);
  return mu * (effective / denom);
}

std::uint64_t lookup_count(const std::map<std::string, std::uint64_t>& counts,
                           const std::string& term) {
  auto it = counts.find(term);
  return it == counts.end() ? 0 : it->second;
}

// Pairs (x in a, y in b) with y == x + 1: exact ordered adjacency. Both
// position lists are strictly increasing, so each x matches at most one y.
std::uint64_t adjacent_pair_count(const std::vector<std::uint32_t>& a,
                                  const std::vector<std::uint32_t>& b) {
  std::uint64_t count = 0;
  std::size_t j = 0;
  for (std::uint32_t x : a) {
    while (j < b.size() && b[j] < x + 1) ++j;
    if (j < b.size() && b[j] == x + 1) ++count;
  }
  return count;
}

// Pairs (x in a, y in b) with |x - y| <= window - 1, distinct terms.
std::uint64_t window_pair_count(const std::vector<std::uint32_t>& a,
                                const std::vector<std::uint32_t>& b,
                                std::uint32_t window) {
  std::uint64_t count = 0;
  std::size_t lo = 0;
  std::size_t hi = 0;
  const std::int64_t spread = static_cast<std::int64_t>(window) - 1;
  for (std::uint32_t x : a) {
    while (lo < b.size() &&
           static_cast<std::int64_t>(b[lo]) < static_cast<std::int64_t>(x) -
                                                  spread)
      ++lo;
    if (hi < lo) hi = lo;
    while (hi < b.size() &&
           static_cast<std::int64_t>(b[hi]) <= static_cast<std::int64_t>(x) +
                                                   spread)
      ++hi;
    count += hi - lo;
  }
  return count;
}

// Unordered index pairs i < j with p[j] - p[i] <= window - 1, for a query
// bigram that repeats one term.
std::uint64_t window_pair_count_same(const std::vector<std::uint32_t>& p,
                                     std::uint32_t window) {
  std::uint64_t count = 0;
  std::size_t lo = 0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    while (p[j] - p[lo] > window - 1) ++lo;
    count += j - lo;
  }
  return count;
}

// Calls fn(positions_a, positions_b) for every unit id present in both
// posting lists and in `unit_ids` (all three sorted ascending).
template <typename Fn>
void for_each_common_unit(const std::vector<Posting>& a,
                          const std::vector<Posting>& b,
                          const std::vector<std::uint64_t>& unit_ids, Fn fn) {
  std::size_t ia = 0;
  std::size_t ib = 0;
  for (std::uint64_t id : unit_ids) {
    while (ia < a.size() && a[ia].unit_id < id) ++ia;
    while (ib < b.size() && b[ib].unit_id < id) ++ib;
    if (ia < a.size() && ib < b.size() && a[ia].unit_id == id &&
        b[ib].unit_id == id)
      fn(a[ia].positions, b[ib].positions);
  }
}

struct BigramGroupCounts {
  std::uint64_t ordered = 0;
  std::uint64_t unordered = 0;
};

BigramGroupCounts group_bigram_counts(const IndexPartition& partition,
                                      const GroupProfile& group,
                                      const std::string& a,
                                      const std::string& b,
                                      std::uint32_t window) {
  BigramGroupCounts counts;
  const auto& pa = lookup_postings(partition, a);
  const auto& pb = lookup_postings(partition, b);
  for_each_common_unit(
      pa, pb, group.unit_ids,
      [&](const std::vector<std::uint32_t>& pos_a,
          const std::vector<std::uint32_t>& pos_b) {
        counts.ordered += adjacent_pair_count(pos_a, pos_b);
        counts.unordered += a == b ? window_pair_count_same(pos_a, window)
                                   : window_pair_count(pos_a, pos_b, window);
      });
  return counts;
}

// Proximity features over the bigram slot space, given a unigram score
// computed elsewhere (batched or per group; both are bit-identical).
double combine_sdm(const IndexPartition& partition, const GroupProfile& group,
                   const std::vector<std::string>& terms,
                   const ScoringConfig& config,
                   const std::vector<BigramBackground>& backgrounds,
                   double f_t) {
  const double slots = static_cast<double>(group.bigram_slots);
  const std::uint64_t total_slots = partition.stats.bigram_slots_total;
  double f_o = 0.0;
  double f_u = 0.0;
  for (std::size_t i = 0; i + 1 < terms.size(); ++i) {
    const BigramGroupCounts counts = group_bigram_counts(
        partition, group, terms[i], terms[i + 1], config.unordered_window);
    f_o += kernels::smoothed_log_term(
        static_cast<double>(counts.ordered), slots,
        background_mass(config.mu, backgrounds[i].ordered_cf,
                        config.unseen_cf, total_slots),
        config.mu);
    f_u += kernels::smoothed_log_term(
        static_cast<double>(counts.unordered), slots,
        background_mass(config.mu, backgrounds[i].unordered_cf,
                        config.unseen_cf, total_slots),
        config.mu);
  }
  return config.sdm_weights.term * f_t + config.sdm_weights.ordered * f_o +
         config.sdm_weights.unordered * f_u;
}

// The SDM proximity features are vacuous for single-term sub-queries, and
// zero lambdas short-circuit to the unigram score byte for byte.
bool sdm_is_unigram(const std::vector<std::string>& terms,
                    const ScoringConfig& config) {
  return terms.size() < 2 || (config.sdm_weights.ordered == 0.0 &&
                              config.sdm_weights.unordered == 0.0);
}

double dot(const std::vector<double>& features,
           const std::vector<double>& weights) {
  double sum = 0.0;
  for (std::size_t i = 0; i < features.size(); ++i)
    sum += weights[i] * features[i];
  return sum;
}

void sort_tuples(std::vector<TupleResult>& tuples) {
  std::sort(tuples.begin(), tuples.end(),
            [](const TupleResult& a, const TupleResult& b) {
              if (a.score != b.score) return a.score > b.score;
              return a.tuple < b.tuple;
            });
}

std::vector<double> effective_weights(const ScoringConfig& config,
                                      std::size_t arity) {
  const std::size_t n = 2 * arity - 1;
  if (!config.rerank_weights)
    return std::vector<double>(n, 1.0 / static_cast<double>(n));
  if (config.rerank_weights->size() != n)
    throw std::invalid_argument(
        "rerank weights have arity " +
        std::to_string(config.rerank_weights->size()) + ", query needs " +
        std::to_string(n));
  return *config.rerank_weights;
}

}  // namespace

void ScoringConfig::validate() const {
  if (!(mu > 0.0) || !std::isfinite(mu))
    throw std::invalid_argument("mu must be positive and finite");
  const auto& w = sdm_weights;
  if (w.term < 0.0 || w.ordered < 0.0 || w.unordered < 0.0)
    throw std::invalid_argument("sdm weights must be non-negative");
  if (std::abs(w.term + w.ordered + w.unordered - 1.0) > 1e-9)
    throw std::invalid_argument("sdm weights must sum to 1");
  if (unordered_window < 2)
    throw std::invalid_argument("unordered window must be at least 2 tokens");
  if (candidate_depth == 0)
    throw std::invalid_argument("candidate depth must be positive");
  if (!(unseen_cf > 0.0) || !std::isfinite(unseen_cf))
    throw std::invalid_argument("unseen_cf must be positive and finite");
  if (rerank_weights)
    for (double v : *rerank_weights)
      if (!std::isfinite(v))
        throw std::invalid_argument("rerank weights must be finite");
}

RelationalQuery parse_query(const QueryRecord& record,
                            const TokenizerOptions& options) {
  if (record.components.size() % 2 == 0)
    throw FormatError("query \"" + record.query_id +
                      "\" has an even component count (" +
                      std::to_string(record.components.size()) + ")");
  if (record.components.size() < 3)
    throw FormatError("query \"" + record.query_id +
                      "\" needs at least 3 components");

  RelationalQuery query;
  query.query_id = record.query_id;
  query.nl_text = record.nl_text;
  for (std::size_t i = 0; i < record.components.size(); ++i) {
    auto terms = normalize_terms(record.components[i], options);
    if (terms.empty())
      throw FormatError("component \"" + record.components[i] +
                        "\" of query \"" + record.query_id +
                        "\" normalizes to nothing");
    if (i % 2 == 0)
      query.entity_subqueries.push_back(std::move(terms));
    else
      query.relationship_subqueries.push_back(std::move(terms));
  }
  return query;
}

double score_group_lm(const GroupProfile& group,
                      const std::vector<std::string>& terms,
                      const CollectionStats& stats, double mu,
                      double unseen_cf) {
  if (terms.empty()) throw std::invalid_argument("empty sub-query");
  if (!(mu > 0.0)) throw std::invalid_argument("mu must be positive");
  const double length = static_cast<double>(group.total_length);
  double score = 0.0;
  for (const std::string& term : terms)
    score += kernels::smoothed_log_term(
        static_cast<double>(lookup_count(group.term_freq, term)), length,
        background_mass(mu, lookup_count(stats.term_cf, term), unseen_cf,
                        stats.total_terms),
        mu);
  return score;
}

std::vector<BigramBackground> sdm_backgrounds(
    const IndexPartition& partition, const std::vector<std::string>& terms,
    std::uint32_t unordered_window) {
  std::vector<BigramBackground> backgrounds;
  for (std::size_t i = 0; i + 1 < terms.size(); ++i) {
    BigramBackground bg;
    auto it = partition.stats.bigram_cf.find({terms[i], terms[i + 1]});
    if (it != partition.stats.bigram_cf.end()) bg.ordered_cf = it->second;

    const auto& pa = lookup_postings(partition, terms[i]);
    const auto& pb = lookup_postings(partition, terms[i + 1]);
    if (terms[i] == terms[i + 1]) {
      for (const Posting& post : pa)
        bg.unordered_cf += window_pair_count_same(post.positions,
                                                  unordered_window);
    } else {
      std::size_t ib = 0;
      for (const Posting& post : pa) {
        while (ib < pb.size() && pb[ib].unit_id < post.unit_id) ++ib;
        if (ib < pb.size() && pb[ib].unit_id == post.unit_id)
          bg.unordered_cf += window_pair_count(post.positions,
                                               pb[ib].positions,
                                               unordered_window);
      }
    }
    backgrounds.push_back(bg);
  }
  return backgrounds;
}

double score_group_sdm(const IndexPartition& partition, const UnitKey& key,
                       const std::vector<std::string>& terms,
                       const ScoringConfig& config,
                       const std::vector<BigramBackground>* backgrounds) {
  const GroupProfile* group = group_profile(partition, key);
  if (group == nullptr)
    throw std::invalid_argument("unknown group key \"" + key.first +
                                (key.second.empty() ? "" : "|" + key.second) +
                                "\"");
  const double f_t = score_group_lm(*group, terms, partition.stats, config.mu,
                                    config.unseen_cf);
  if (sdm_is_unigram(terms, config)) return f_t;

  std::vector<BigramBackground> local;
  if (backgrounds == nullptr) {
    local = sdm_backgrounds(partition, terms, config.unordered_window);
    backgrounds = &local;
  }
  return combine_sdm(partition, *group, terms, config, *backgrounds, f_t);
}

SubqueryRanking retrieve_subquery(const IndexPartition& partition,
                                  std::string_view slot,
                                  const std::vector<std::string>& terms,
                                  const ScoringConfig& config) {
  config.validate();
  if (terms.empty()) throw std::invalid_argument("empty sub-query");

  SubqueryRanking ranking;
  ranking.slot = std::string(slot);

  // Stage 1: disjunctive term match, units mapped to their groups.
  std::set<UnitKey> candidates;
  for (const std::string& term : terms)
    for (const Posting& post : lookup_postings(partition, term))
      candidates.insert(*group_of(partition, post.unit_id));
  if (candidates.empty()) return ranking;

  // Stage 2: batch the unigram model over all candidate groups (one kernel
  // call per query term), then add proximity features where configured.
  std::vector<const UnitKey*> keys;
  std::vector<const GroupProfile*> groups;
  keys.reserve(candidates.size());
  groups.reserve(candidates.size());
  for (const UnitKey& key : candidates) {
    keys.push_back(&key);
    groups.push_back(group_profile(partition, key));
  }

  const std::size_t n = groups.size();
  std::vector<double> acc(n, 0.0);
  std::vector<double> len(n);
  std::vector<double> tf(n);
  for (std::size_t i = 0; i < n; ++i)
    len[i] = static_cast<double>(groups[i]->total_length);
  for (const std::string& term : terms) {
    const double mu_bg =
        background_mass(config.mu, lookup_count(partition.stats.term_cf, term),
                        config.unseen_cf, partition.stats.total_terms);
    for (std::size_t i = 0; i < n; ++i)
      tf[i] = static_cast<double>(lookup_count(groups[i]->term_freq, term));
    kernels::active().smoothed_log_accum(acc.data(), tf.data(), len.data(), n,
                                         mu_bg, config.mu);
  }

  const bool proximity =
      config.model == ScoreModel::SDM && !sdm_is_unigram(terms, config);
  std::vector<BigramBackground> backgrounds;
  if (proximity)
    backgrounds = sdm_backgrounds(partition, terms, config.unordered_window);

  ranking.entries.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double score =
        proximity ? combine_sdm(partition, *groups[i], terms, config,
                                backgrounds, acc[i])
                  : acc[i];
    ranking.entries.push_back({*keys[i], score});
  }
  std::sort(ranking.entries.begin(), ranking.entries.end(),
            [](const RankEntry& a, const RankEntry& b) {
              if (a.score != b.score) return a.score > b.score;
              return a.key < b.key;
            });
  if (ranking.entries.size() > config.candidate_depth)
    ranking.entries.resize(config.candidate_depth);
  return ranking;
}

std::vector<TupleResult> join_tuples(
    const std::vector<SubqueryRanking>& entity_rankings,
    const std::vector<SubqueryRanking>& relationship_rankings,
    const RelationalQuery& query, const ScoringConfig& config) {
  const std::size_t arity = entity_rankings.size();
  if (arity < 2)
    throw std::invalid_argument("a join needs at least 2 entity rankings");
  if (relationship_rankings.size() != arity - 1)
    throw std::invalid_argument(
        "expected " + std::to_string(arity - 1) + " relationship rankings, " +
        "got " + std::to_string(relationship_rankings.size()));
  const std::vector<double> weights = effective_weights(config, arity);

  std::vector<std::map<std::string, double>> entity_scores(arity);
  for (std::size_t i = 0; i < arity; ++i)
    for (const RankEntry& e : entity_rankings[i].entries)
      entity_scores[i].emplace(e.key.first, e.score);

  std::vector<std::map<std::pair<std::string, std::string>, double>>
      pair_scores(arity - 1);
  for (std::size_t i = 0; i + 1 < arity; ++i)
    for (const RankEntry& e : relationship_rankings[i].entries)
      pair_scores[i].emplace(std::make_pair(e.key.first, e.key.second),
                             e.score);

  auto pair_score = [&](std::size_t i, const std::string& a,
                        const std::string& b) -> std::optional<double> {
    const auto& scores = pair_scores[i];
    auto forward = scores.find({a, b});
    if (query.orientation == Orientation::Strict)
      return forward == scores.end()
                 ? std::nullopt
                 : std::optional<double>(forward->second);
    auto backward = scores.find({b, a});
    if (forward == scores.end() && backward == scores.end())
      return std::nullopt;
    if (forward == scores.end()) return backward->second;
    if (backward == scores.end()) return forward->second;
    return std::max(forward->second, backward->second);
  };

  std::vector<TupleResult> results;
  std::vector<std::string> tuple;
  std::vector<double> features;
  auto extend = [&](auto&& self, std::size_t next_entity) -> void {
    if (next_entity == arity) {
      TupleResult result;
      result.tuple = tuple;
      result.features = features;
      result.score = dot(features, weights);
      results.push_back(std::move(result));
      return;
    }
    for (const auto& [entity, score] : entity_scores[next_entity]) {
      if (next_entity > 0) {
        const auto rel = pair_score(next_entity - 1, tuple.back(), entity);
        if (!rel) continue;
        features.push_back(*rel);
        tuple.push_back(entity);
        features.push_back(score);
        self(self, next_entity + 1);
        features.pop_back();
        tuple.pop_back();
        features.pop_back();
      } else {
        tuple.push_back(entity);
        features.push_back(score);
        self(self, next_entity + 1);
        features.pop_back();
        tuple.pop_back();
      }
    }
  };
  extend(extend, 0);
  sort_tuples(results);
  return results;
}

std::vector<TupleResult> rerank(std::vector<TupleResult> tuples,
                                const std::vector<double>& weights) {
  for (const TupleResult& t : tuples)
    if (t.features.size() != weights.size())
      throw std::invalid_argument(
          "weight vector has arity " + std::to_string(weights.size()) +
          ", tuple features have " + std::to_string(t.features.size()));
  for (TupleResult& t : tuples) t.score = dot(t.features, weights);
  sort_tuples(tuples);
  return tuples;
}

std::vector<TupleResult> answer_query(const ERIndex& index,
                                      const RelationalQuery& query,
                                      const ScoringConfig& config) {
  config.validate();
  if (query.entity_subqueries.size() < 2 ||
      query.relationship_subqueries.size() !=
          query.entity_subqueries.size() - 1)
    throw std::invalid_argument("query \"" + query.query_id +
                                "\" has inconsistent sub-query arity");

  std::vector<SubqueryRanking> entity_rankings;
  for (std::size_t i = 0; i < query.entity_subqueries.size(); ++i)
    entity_rankings.push_back(retrieve_subquery(
        index.entity, "E" + std::to_string(i + 1), query.entity_subqueries[i],
        config));
  std::vector<SubqueryRanking> relationship_rankings;
  for (std::size_t i = 0; i < query.relationship_subqueries.size(); ++i)
    relationship_rankings.push_back(retrieve_subquery(
        index.pair, "R" + std::to_string(i + 1) + "," + std::to_string(i + 2),
        query.relationship_subqueries[i], config));
  return join_tuples(entity_rankings, relationship_rankings, query, config);
}

void append_run_lines(std::string& out, const std::string& query_id,
                      const std::vector<TupleResult>& tuples,
                      std::string_view tag) {
  for (std::size_t i = 0; i < tuples.size(); ++i) {
    out += query_id;
    out += " Q0 ";
    out += join(tuples[i].tuple, '|');
    out += ' ';
    out += std::to_string(i + 1);
    out += ' ';
    out += format_double(tuples[i].score, 6);
    out += ' ';
    out += tag;
    out += '\n';
  }
}

void append_feature_lines(std::string& out, const std::string& query_id,
                          const std::vector<TupleResult>& tuples,
                          const std::vector<QrelRecord>& qrels) {
  std::set<std::vector<std::string>> relevant;
  for (const QrelRecord& r : qrels)
    if (r.query_id == query_id) relevant.insert(r.tuple);
  for (const TupleResult& t : tuples) {
    out += relevant.count(t.tuple) ? '1' : '0';
    out += " qid:";
    out += query_id;
    for (std::size_t i = 0; i < t.features.size(); ++i) {
      out += ' ';
      out += std::to_string(i + 1);
      out += ':';
      out += format_double(t.features[i], 6);
    }
    out += " # ";
    out += join(t.tuple, '|');
    out += '\n';
  }
}

}  // namespace ertk
