#include "ertk/collection.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"

#include "ertk/corpus.hpp"
#include "ertk/util.hpp"

namespace ertk {
namespace {

using nlohmann::json;

// Code points of the cell text with surrounding whitespace removed;
// empty when the cell is blank.
std::vector<CodePoint> trimmed_points(std::string_view text) {
  std::vector<CodePoint> cps = decode_utf8(text);
  std::size_t a = 0;
  std::size_t b = cps.size();
  while (a < b && is_unicode_space(cps[a].cp)) ++a;
  while (b > a && is_unicode_space(cps[b - 1].cp)) --b;
  return {cps.begin() + a, cps.begin() + b};
}

std::string require_string(const json& obj, const char* field,
                           std::size_t line_no = 0) {
  auto it = obj.find(field);
  if (it == obj.end() || !it->is_string())
    throw FormatError(std::string("missing or non-string field \"") + field +
                          "\"",
                      line_no);
  return it->get<std::string>();
}

bool has_whitespace(std::string_view s) {
  for (const CodePoint& p : decode_utf8(s))
    if (is_unicode_space(p.cp)) return true;
  return false;
}

void validate_entity_id(std::string_view id, std::size_t line_no) {
  if (id.empty() || has_whitespace(id) ||
      id.find('|') != std::string_view::npos)
    throw FormatError("entity id \"" + std::string(id) +
                          "\" must be non-empty without whitespace or '|'",
                      line_no);
}

// Components alternate entity, relationship, entity, ...
bool is_entity_position(std::size_t idx) { return idx % 2 == 0; }

std::string normalized_type(const std::string& component) {
  return join(normalize_terms(component), ' ');
}

}  // namespace

// ---------------------------------------------------------------------------
// Tables

SourceTable parse_table_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("invalid table JSON: ") + e.what());
  }
  if (!doc.is_object()) throw FormatError("table JSON must be an object");

  SourceTable table;
  table.table_id = require_string(doc, "table_id");
  if (table.table_id.empty()) throw FormatError("table_id must be non-empty");
  table.page_title = require_string(doc, "page_title");
  table.topic_area = require_string(doc, "topic_area");
  if (doc.contains("section_title"))
    table.section_title = require_string(doc, "section_title");
  if (doc.contains("intro_text"))
    table.intro_text = require_string(doc, "intro_text");

  const auto cols = doc.find("columns");
  if (cols == doc.end() || !cols->is_array() || cols->empty())
    throw FormatError("table \"" + table.table_id +
                      "\" needs a non-empty columns array");
  for (const json& c : *cols) {
    if (!c.is_object())
      throw FormatError("table \"" + table.table_id +
                        "\": column entries must be objects");
    ColumnSpec spec;
    spec.header = require_string(c, "header");
    table.columns.push_back(std::move(spec));
  }

  const auto rows = doc.find("rows");
  if (rows == doc.end() || !rows->is_array())
    throw FormatError("table \"" + table.table_id + "\" needs a rows array");
  for (const json& r : *rows) {
    if (!r.is_array() || r.size() != table.columns.size())
      throw FormatError("table \"" + table.table_id + "\" row " +
                        std::to_string(table.rows.size()) + " has " +
                        std::to_string(r.is_array() ? r.size() : 0) +
                        " cells, expected " +
                        std::to_string(table.columns.size()));
    std::vector<Cell> row;
    for (const json& c : r) {
      if (!c.is_object())
        throw FormatError("table \"" + table.table_id +
                          "\": cells must be objects");
      Cell cell;
      cell.text = require_string(c, "text");
      const auto ent = c.find("entity");
      if (ent != c.end() && !ent->is_null()) {
        if (!ent->is_string() || ent->get<std::string>().empty())
          throw FormatError("table \"" + table.table_id +
                            "\": cell entity must be a non-empty string");
        cell.entity = ent->get<std::string>();
      }
      row.push_back(std::move(cell));
    }
    table.rows.push_back(std::move(row));
  }

  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    std::size_t non_empty = 0;
    std::size_t linked = 0;
    for (const auto& row : table.rows) {
      if (trimmed_points(row[c].text).empty()) continue;
      ++non_empty;
      if (row[c].entity) ++linked;
    }
    table.columns[c].cells_linked_ratio =
        non_empty == 0 ? 0.0
                       : static_cast<double>(linked) /
                             static_cast<double>(non_empty);
  }
  return table;
}

std::vector<SourceTable> load_tables_dir(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> paths;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(dir, ec))
    if (entry.path().extension() == ".json") paths.push_back(entry.path());
  if (ec)
    throw IoError("cannot list table directory " + dir.string() + ": " +
                  ec.message());
  std::sort(paths.begin(), paths.end());

  std::vector<SourceTable> tables;
  std::unordered_set<std::string> seen;
  for (const auto& path : paths) {
    SourceTable table;
    try {
      table = parse_table_json(read_file(path));
    } catch (const FormatError& e) {
      throw FormatError(path.filename().string() + ": " + e.what());
    }
    if (!seen.insert(table.table_id).second)
      throw FormatError("duplicate table_id \"" + table.table_id + "\" in " +
                        path.filename().string());
    tables.push_back(std::move(table));
  }
  return tables;
}

// ---------------------------------------------------------------------------
// Key-column detection

std::optional<std::size_t> detect_key_column(
    const SourceTable& table, const KeyColumnThresholds& thresholds) {
  if (table.columns.size() < 2 || table.rows.size() < 2) return std::nullopt;
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    std::set<std::string_view> distinct;
    std::size_t non_empty = 0;
    std::size_t length_sum = 0;
    for (const auto& row : table.rows) {
      const auto cps = trimmed_points(row[c].text);
      if (cps.empty()) continue;
      ++non_empty;
      length_sum += cps.size();
      distinct.insert(std::string_view(row[c].text)
                          .substr(cps.front().begin,
                                  cps.back().end - cps.front().begin));
    }
    if (non_empty == 0) continue;
    const double nonempty_ratio =
        static_cast<double>(non_empty) / static_cast<double>(table.rows.size());
    const double unique_ratio =
        static_cast<double>(distinct.size()) / static_cast<double>(non_empty);
    const double avg_length =
        static_cast<double>(length_sum) / static_cast<double>(non_empty);
    if (nonempty_ratio >= thresholds.min_nonempty_ratio &&
        unique_ratio >= thresholds.min_unique_ratio &&
        avg_length >= thresholds.min_avg_length &&
        avg_length <= thresholds.max_avg_length)
      return c;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Judgment generation

JudgmentResult generate_judgments(const SourceTable& table,
                                  std::size_t key_col,
                                  const std::vector<std::size_t>& other_cols,
                                  double min_linked_ratio) {
  if (other_cols.empty() || other_cols.size() > 2)
    throw std::invalid_argument("choose 1 or 2 non-key columns");
  std::vector<std::size_t> participating{key_col};
  participating.insert(participating.end(), other_cols.begin(),
                       other_cols.end());
  std::set<std::size_t> distinct(participating.begin(), participating.end());
  if (distinct.size() != participating.size())
    throw std::invalid_argument("participating columns must be distinct");
  for (std::size_t c : participating)
    if (c >= table.columns.size())
      throw std::invalid_argument("column index " + std::to_string(c) +
                                  " out of range");

  for (std::size_t c : participating)
    if (table.columns[c].cells_linked_ratio < min_linked_ratio)
      throw FormatError(
          "column \"" + table.columns[c].header + "\" of table \"" +
          table.table_id + "\" has linked ratio " +
          format_double(table.columns[c].cells_linked_ratio, 3) +
          ", below " + format_double(min_linked_ratio, 3) +
          "; generation refused");

  JudgmentResult result;
  result.stub.query_id = "stub_" + table.table_id;
  for (std::size_t c : participating)
    result.stub.query_id += "_" + std::to_string(c);
  result.stub.source_table = table.table_id;
  result.stub.components.push_back(table.columns[key_col].header);
  for (std::size_t c : other_cols) {
    result.stub.components.emplace_back();  // relationship slot for the editor
    result.stub.components.push_back(table.columns[c].header);
  }

  for (const auto& row : table.rows) {
    bool linked = true;
    for (std::size_t c : participating) linked = linked && row[c].entity;
    if (!linked) {
      ++result.skipped_rows;
      continue;
    }
    QrelRecord qrel;
    qrel.query_id = result.stub.query_id;
    for (std::size_t c : participating) qrel.tuple.push_back(*row[c].entity);
    result.qrels.push_back(std::move(qrel));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Sampling

double jaccard_title_similarity(std::string_view title_a,
                                std::string_view title_b) {
  const auto terms_a = normalize_terms(title_a);
  const auto terms_b = normalize_terms(title_b);
  const std::set<std::string> a(terms_a.begin(), terms_a.end());
  const std::set<std::string> b(terms_b.begin(), terms_b.end());
  if (a.empty() && b.empty()) return 0.0;
  std::size_t common = 0;
  for (const auto& t : a) common += b.count(t);
  return static_cast<double>(common) /
         static_cast<double>(a.size() + b.size() - common);
}

std::vector<std::size_t> stratified_sample(
    const std::vector<SourceTable>& tables, std::size_t target_count,
    double max_similarity, std::uint64_t seed) {
  if (target_count == 0)
    throw std::invalid_argument("target_count must be positive");

  // Sorted area map gives the round-robin order; each area's candidate order
  // comes from its own seeded shuffle so area processing order cannot leak
  // into the per-area sequence.
  std::map<std::string, std::vector<std::size_t>> by_area;
  for (std::size_t i = 0; i < tables.size(); ++i)
    by_area[tables[i].topic_area].push_back(i);
  for (auto& [area, candidates] : by_area) {
    SplitMix64 rng(seed ^ fnv1a64(area));
    deterministic_shuffle(candidates, rng);
  }

  std::vector<std::size_t> selected;
  std::vector<std::size_t> cursor(by_area.size(), 0);
  bool any_left = true;
  while (selected.size() < target_count && any_left) {
    any_left = false;
    std::size_t a = 0;
    for (auto& [area, candidates] : by_area) {
      std::size_t& at = cursor[a++];
      if (at >= candidates.size()) continue;
      const std::size_t idx = candidates[at++];
      any_left = any_left || at < candidates.size();
      bool admit = true;
      for (std::size_t s : selected)
        admit = admit && jaccard_title_similarity(tables[idx].page_title,
                                                  tables[s].page_title) <
                             max_similarity;
      if (admit) {
        selected.push_back(idx);
        if (selected.size() == target_count) break;
      }
    }
  }
  return selected;
}

// ---------------------------------------------------------------------------
// Query-collection files

std::vector<QueryRecord> load_queries(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<QueryRecord> queries;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw FormatError(std::string("invalid query JSON: ") + e.what(),
                        line_no);
    }
    if (!rec.is_object())
      throw FormatError("query record must be an object", line_no);

    QueryRecord q;
    q.query_id = require_string(rec, "query_id", line_no);
    if (q.query_id.empty() || has_whitespace(q.query_id))
      throw FormatError("query_id must be non-empty without whitespace",
                        line_no);
    if (!seen.insert(q.query_id).second)
      throw FormatError("duplicate query_id \"" + q.query_id + "\"", line_no);
    q.nl_text = require_string(rec, "nl_text", line_no);

    const auto comps = rec.find("components");
    if (comps == rec.end() || !comps->is_array())
      throw FormatError("missing components array", line_no);
    for (const json& c : *comps) {
      if (!c.is_string() || c.get<std::string>().empty())
        throw FormatError("components must be non-empty strings", line_no);
      q.components.push_back(c.get<std::string>());
    }
    if (q.components.size() % 2 == 0)
      throw FormatError("query \"" + q.query_id + "\" has an even component " +
                            "count (" + std::to_string(q.components.size()) +
                            ")",
                        line_no);
    if (q.components.size() < 3)
      throw FormatError("query \"" + q.query_id + "\" needs at least 3 " +
                            "components",
                        line_no);
    if (q.query_id.starts_with("RELink_P_") && q.components.size() != 3)
      throw FormatError("pair query \"" + q.query_id + "\" must have 3 " +
                            "components, has " +
                            std::to_string(q.components.size()),
                        line_no);
    if (q.query_id.starts_with("RELink_T_") && q.components.size() != 5)
      throw FormatError("triple query \"" + q.query_id + "\" must have 5 " +
                            "components, has " +
                            std::to_string(q.components.size()),
                        line_no);
    if (rec.contains("source_table"))
      q.source_table = require_string(rec, "source_table", line_no);
    queries.push_back(std::move(q));
  }
  return queries;
}

std::vector<QrelRecord> load_qrels(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<QrelRecord> qrels;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string query_id, iteration, tuple_text, label_text, extra;
    if (!(fields >> query_id)) continue;  // blank line
    if (!(fields >> iteration >> tuple_text >> label_text) ||
        (fields >> extra))
      throw FormatError(
          "expected `<query_id> <iter> <e1|e2|...> <label>` with 4 fields",
          line_no);

    int label = 0;
    const auto [ptr, err] = std::from_chars(
        label_text.data(), label_text.data() + label_text.size(), label);
    if (err != std::errc() || ptr != label_text.data() + label_text.size() ||
        label < 0)
      throw FormatError("label \"" + label_text +
                            "\" must be a non-negative integer",
                        line_no);
    if (label == 0) continue;

    QrelRecord qrel;
    qrel.query_id = query_id;
    qrel.tuple = split(tuple_text, '|');
    if (qrel.tuple.size() < 2)
      throw FormatError("tuple \"" + tuple_text +
                            "\" needs at least 2 pipe-joined entities",
                        line_no);
    for (const auto& e : qrel.tuple) validate_entity_id(e, line_no);
    if (!seen.insert(query_id + " " + tuple_text).second)
      throw FormatError("duplicate judgment for query \"" + query_id +
                            "\" tuple \"" + tuple_text + "\"",
                        line_no);
    qrels.push_back(std::move(qrel));
  }
  return qrels;
}

std::pair<std::vector<QueryRecord>, std::vector<QrelRecord>> load_qc(
    const std::filesystem::path& queries_path,
    const std::filesystem::path& qrels_path) {
  auto queries = load_queries(queries_path);
  auto qrels = load_qrels(qrels_path);

  std::unordered_map<std::string, std::size_t> arity;
  for (const auto& q : queries) arity[q.query_id] = query_arity(q);
  for (const auto& r : qrels) {
    auto it = arity.find(r.query_id);
    if (it == arity.end())
      throw FormatError("qrels reference unknown query_id \"" + r.query_id +
                        "\"");
    if (r.tuple.size() != it->second)
      throw FormatError("query \"" + r.query_id + "\" has arity " +
                        std::to_string(it->second) + " but a judgment tuple " +
                        "of arity " + std::to_string(r.tuple.size()));
  }
  return {std::move(queries), std::move(qrels)};
}

// ---------------------------------------------------------------------------
// Statistics

CollectionStatsReport collection_stats(const std::vector<QueryRecord>& queries,
                                       const std::vector<QrelRecord>& qrels) {
  CollectionStatsReport report;
  report.total_queries = queries.size();

  std::unordered_map<std::string, std::size_t> judgments;
  for (const auto& r : qrels) ++judgments[r.query_id];

  std::size_t nl_sum_all = 0, nl_sum_pair = 0, nl_sum_triple = 0;
  std::size_t entity_len_sum = 0, entity_count = 0;
  std::size_t rel_len_sum = 0, rel_count = 0;
  std::size_t judged_all = 0, judged_pair = 0, judged_triple = 0;
  std::set<std::string> entity_types, relationship_types;

  for (const auto& q : queries) {
    const std::size_t nl_len = count_code_points(q.nl_text);
    const std::size_t judged = judgments.count(q.query_id)
                                   ? judgments.at(q.query_id)
                                   : 0;
    nl_sum_all += nl_len;
    judged_all += judged;
    if (q.components.size() == 3) {
      ++report.pair_queries;
      nl_sum_pair += nl_len;
      judged_pair += judged;
    } else if (q.components.size() == 5) {
      ++report.triple_queries;
      nl_sum_triple += nl_len;
      judged_triple += judged;
    }
    for (std::size_t i = 0; i < q.components.size(); ++i) {
      const std::size_t len = count_code_points(q.components[i]);
      if (is_entity_position(i)) {
        entity_len_sum += len;
        ++entity_count;
        entity_types.insert(normalized_type(q.components[i]));
      } else {
        rel_len_sum += len;
        ++rel_count;
        relationship_types.insert(normalized_type(q.components[i]));
      }
    }
  }

  auto avg = [](std::size_t sum, std::size_t n) {
    return n == 0 ? 0.0 : static_cast<double>(sum) / static_cast<double>(n);
  };
  report.avg_nl_length_all = avg(nl_sum_all, report.total_queries);
  report.avg_nl_length_pair = avg(nl_sum_pair, report.pair_queries);
  report.avg_nl_length_triple = avg(nl_sum_triple, report.triple_queries);
  report.avg_entity_component_length = avg(entity_len_sum, entity_count);
  report.avg_relationship_component_length = avg(rel_len_sum, rel_count);
  report.unique_entity_types = entity_types.size();
  report.unique_relationship_types = relationship_types.size();
  report.avg_judgments_all = avg(judged_all, report.total_queries);
  report.avg_judgments_pair = avg(judged_pair, report.pair_queries);
  report.avg_judgments_triple = avg(judged_triple, report.triple_queries);
  return report;
}

}  // namespace ertk
