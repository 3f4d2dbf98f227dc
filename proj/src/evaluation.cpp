#include "ertk/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>
#include <unordered_map>

#include "ertk/util.hpp"

namespace ertk {
namespace {

double parse_double_field(const std::string& text, const char* what,
                          std::size_t line_no) {
  double value = 0.0;
  const auto [ptr, err] =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (err != std::errc() || ptr != text.data() + text.size() ||
      !std::isfinite(value))
    throw FormatError(std::string(what) + " \"" + text +
                          "\" must be a finite number",
                      line_no);
  return value;
}

double discount(std::size_t rank) {
  return 1.0 / std::log2(static_cast<double>(rank) + 1.0);
}

}  // namespace

std::vector<RunEntry> load_run(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<RunEntry> run;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string query_id, q0, tuple_text, rank_text, score_text, tag, extra;
    if (!(fields >> query_id)) continue;
    if (!(fields >> q0 >> tuple_text >> rank_text >> score_text >> tag) ||
        (fields >> extra))
      throw FormatError(
          "expected `<query_id> Q0 <e1|e2|...> <rank> <score> <tag>` with 6 "
          "fields",
          line_no);

    RunEntry entry;
    entry.query_id = query_id;
    entry.tuple = split(tuple_text, '|');
    for (const auto& e : entry.tuple)
      if (e.empty())
        throw FormatError("tuple \"" + tuple_text + "\" has an empty entity",
                          line_no);

    std::size_t rank = 0;
    const auto [ptr, err] = std::from_chars(
        rank_text.data(), rank_text.data() + rank_text.size(), rank);
    if (err != std::errc() || ptr != rank_text.data() + rank_text.size() ||
        rank == 0)
      throw FormatError("rank \"" + rank_text + "\" must be a positive " +
                            "integer",
                        line_no);
    entry.rank = rank;
    entry.score = parse_double_field(score_text, "score", line_no);
    entry.tag = tag;
    run.push_back(std::move(entry));
  }
  return run;
}

bool match_tuple(const std::vector<std::string>& run_tuple,
                 const std::vector<std::string>& qrel_tuple, MatchMode mode) {
  if (run_tuple.size() != qrel_tuple.size()) return false;
  if (mode == MatchMode::Ordered) return run_tuple == qrel_tuple;
  const std::set<std::string> a(run_tuple.begin(), run_tuple.end());
  const std::set<std::string> b(qrel_tuple.begin(), qrel_tuple.end());
  return a == b;
}

EvalReport evaluate(const std::vector<RunEntry>& run,
                    const std::vector<QrelRecord>& qrels,
                    const std::vector<std::size_t>& k_values,
                    MatchMode mode) {
  std::vector<std::size_t> ks(k_values.begin(), k_values.end());
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  for (std::size_t k : ks)
    if (k == 0) throw std::invalid_argument("k values must be positive");

  // Group the run by query in first-appearance order, keeping file order
  // within a query so the stable re-sort preserves declared ranking of ties.
  std::vector<std::string> query_order;
  std::unordered_map<std::string, std::vector<const RunEntry*>> by_query;
  for (const RunEntry& entry : run) {
    auto [it, inserted] = by_query.try_emplace(entry.query_id);
    if (inserted) query_order.push_back(entry.query_id);
    it->second.push_back(&entry);
  }

  std::unordered_map<std::string, std::vector<const QrelRecord*>>
      judgments_by_query;
  for (const QrelRecord& qrel : qrels)
    judgments_by_query[qrel.query_id].push_back(&qrel);

  EvalReport report;
  for (const std::string& query_id : query_order) {
    auto& entries = by_query[query_id];
    std::stable_sort(entries.begin(), entries.end(),
                     [](const RunEntry* a, const RunEntry* b) {
                       return a->score > b->score;
                     });

    std::set<std::vector<std::string>> seen;
    for (const RunEntry* e : entries)
      if (!seen.insert(e->tuple).second)
        throw FormatError("duplicate tuple \"" + join(e->tuple, '|') +
                          "\" in run for query \"" + query_id + "\"");

    const auto judged = judgments_by_query.find(query_id);
    if (judged == judgments_by_query.end() || judged->second.empty()) {
      report.zero_qrel_queries.push_back(query_id);
      continue;
    }

    QueryMetrics m;
    m.query_id = query_id;
    m.relevant_total = judged->second.size();
    m.retrieved = entries.size();

    // rel[i] = 1 when the tuple at derived rank i+1 matches a judgment;
    // each judgment credits at most one tuple.
    std::vector<bool> consumed(judged->second.size(), false);
    std::vector<bool> rel(entries.size(), false);
    for (std::size_t i = 0; i < entries.size(); ++i)
      for (std::size_t j = 0; j < judged->second.size(); ++j)
        if (!consumed[j] &&
            match_tuple(entries[i]->tuple, judged->second[j]->tuple, mode)) {
          consumed[j] = true;
          rel[i] = true;
          break;
        }

    double ap_sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < rel.size(); ++i)
      if (rel[i]) {
        ++hits;
        ap_sum += static_cast<double>(hits) / static_cast<double>(i + 1);
      }
    m.ap = ap_sum / static_cast<double>(m.relevant_total);

    for (std::size_t k : ks) {
      std::size_t hits_at_k = 0;
      double dcg = 0.0;
      for (std::size_t i = 0; i < std::min(k, rel.size()); ++i)
        if (rel[i]) {
          ++hits_at_k;
          dcg += discount(i + 1);
        }
      double idcg = 0.0;
      for (std::size_t i = 1; i <= std::min(k, m.relevant_total); ++i)
        idcg += discount(i);
      m.precision_at[k] =
          static_cast<double>(hits_at_k) / static_cast<double>(k);
      m.ndcg_at[k] = dcg / idcg;
      m.recall_at[k] =
          static_cast<double>(hits_at_k) / static_cast<double>(m.relevant_total);
    }
    report.per_query.push_back(std::move(m));
  }

  std::sort(report.per_query.begin(), report.per_query.end(),
            [](const QueryMetrics& a, const QueryMetrics& b) {
              return a.query_id < b.query_id;
            });
  std::sort(report.zero_qrel_queries.begin(), report.zero_qrel_queries.end());

  const auto n = static_cast<double>(report.per_query.size());
  if (!report.per_query.empty()) {
    for (const QueryMetrics& m : report.per_query) {
      report.map += m.ap;
      for (std::size_t k : ks) {
        report.mean_precision_at[k] += m.precision_at.at(k);
        report.mean_ndcg_at[k] += m.ndcg_at.at(k);
        report.mean_recall_at[k] += m.recall_at.at(k);
      }
    }
    report.map /= n;
    for (std::size_t k : ks) {
      report.mean_precision_at[k] /= n;
      report.mean_ndcg_at[k] /= n;
      report.mean_recall_at[k] /= n;
    }
  } else {
    for (std::size_t k : ks) {
      report.mean_precision_at[k] = 0.0;
      report.mean_ndcg_at[k] = 0.0;
      report.mean_recall_at[k] = 0.0;
    }
  }
  return report;
}

std::string metrics_tsv(const EvalReport& report) {
  std::string out;
  auto row = [&out](std::string_view metric, std::string_view query,
                    const std::string& value) {
    out += metric;
    out += '\t';
    out += query;
    out += '\t';
    out += value;
    out += '\n';
  };
  row("num_queries", "all", std::to_string(report.per_query.size()));
  row("num_excluded", "all", std::to_string(report.zero_qrel_queries.size()));
  for (const QueryMetrics& m : report.per_query)
    row("ap", m.query_id, format_double(m.ap, 6));
  row("map", "all", format_double(report.map, 6));
  for (const auto& [k, mean] : report.mean_precision_at) {
    const std::string name = "p@" + std::to_string(k);
    for (const QueryMetrics& m : report.per_query)
      row(name, m.query_id, format_double(m.precision_at.at(k), 6));
    row(name, "all", format_double(mean, 6));
  }
  for (const auto& [k, mean] : report.mean_ndcg_at) {
    const std::string name = "ndcg@" + std::to_string(k);
    for (const QueryMetrics& m : report.per_query)
      row(name, m.query_id, format_double(m.ndcg_at.at(k), 6));
    row(name, "all", format_double(mean, 6));
  }
  for (const auto& [k, mean] : report.mean_recall_at) {
    const std::string name = "recall@" + std::to_string(k);
    for (const QueryMetrics& m : report.per_query)
      row(name, m.query_id, format_double(m.recall_at.at(k), 6));
    row(name, "all", format_double(mean, 6));
  }
  return out;
}

}  // namespace ertk
