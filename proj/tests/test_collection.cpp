#include <algorithm>
#include <cstdint>
#include <functional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "doctest.h"
#include "ertk/collection.hpp"
#include "ertk/util.hpp"
#include "helpers.hpp"

using namespace ertk;
using testing::TempDir;

namespace {

// JSON for one table; cells are "text" or "text@entity".
std::string table_json(const std::string& table_id, const std::string& title,
                       const std::string& area,
                       const std::vector<std::string>& headers,
                       const std::vector<std::vector<std::string>>& rows) {
  std::string out = "{\"table_id\":\"" + table_id + "\",\"page_title\":\"" +
                    title + "\",\"topic_area\":\"" + area +
                    "\",\"columns\":[";
  for (std::size_t i = 0; i < headers.size(); ++i) {
    if (i) out += ',';
    out += "{\"header\":\"" + headers[i] + "\"}";
  }
  out += "],\"rows\":[";
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (r) out += ',';
    out += '[';
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      if (c) out += ',';
      const std::string& cell = rows[r][c];
      const auto at = cell.find('@');
      if (at == std::string::npos)
        out += "{\"text\":\"" + cell + "\"}";
      else
        out += "{\"text\":\"" + cell.substr(0, at) + "\",\"entity\":\"" +
               cell.substr(at + 1) + "\"}";
    }
    out += ']';
  }
  out += "]}";
  return out;
}

SourceTable make_table(const std::string& table_id, const std::string& title,
                       const std::string& area,
                       const std::vector<std::string>& headers,
                       const std::vector<std::vector<std::string>>& rows) {
  return parse_table_json(table_json(table_id, title, area, headers, rows));
}

// A plain title-only table for sampling tests.
SourceTable title_table(const std::string& id, const std::string& title,
                        const std::string& area) {
  return make_table(id, title, area, {"A", "B"},
                    {{"x1", "y1"}, {"x2", "y2"}});
}

std::size_t thrown_line(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const FormatError& e) {
    return e.line();
  }
  return 0;  // no throw
}

}  // namespace

// ---------------------------------------------------------------------------
// Table parsing

TEST_CASE("parse_table_json reads cells, links and optional fields") {
  auto table = parse_table_json(R"({
    "table_id": "t1",
    "page_title": "List of lakes",
    "topic_area": "Geography",
    "section_title": "Largest",
    "intro_text": "Lakes by area.",
    "columns": [{"header": "Lake"}, {"header": "Country"}],
    "rows": [
      [{"text": "Saimaa", "entity": "eSaimaa"}, {"text": "Finland"}],
      [{"text": "Vanern", "entity": null}, {"text": "Sweden", "entity": "eSE", "score": 0.9}]
    ]
  })");
  CHECK(table.table_id == "t1");
  CHECK(table.page_title == "List of lakes");
  CHECK(table.topic_area == "Geography");
  CHECK(table.section_title == "Largest");
  CHECK(table.intro_text == "Lakes by area.");
  REQUIRE(table.columns.size() == 2);
  REQUIRE(table.rows.size() == 2);
  CHECK(table.rows[0][0].entity == "eSaimaa");
  CHECK(!table.rows[1][0].entity.has_value());  // explicit null means unlinked
  CHECK(table.rows[1][1].entity == "eSE");

  // Ratios count non-empty cells only.
  CHECK(table.columns[0].cells_linked_ratio == 0.5);
  CHECK(table.columns[1].cells_linked_ratio == 0.5);

  auto sparse = make_table("t2", "T", "A", {"K", "V"},
                           {{"a@e1", "  "}, {"b@e2", "v@e3"}});
  CHECK(sparse.columns[0].cells_linked_ratio == 1.0);
  // The whitespace-only cell is out of the denominator.
  CHECK(sparse.columns[1].cells_linked_ratio == 1.0);
}

TEST_CASE("parse_table_json rejects malformed tables") {
  CHECK_THROWS_AS(parse_table_json("not json"), FormatError);
  CHECK_THROWS_AS(parse_table_json("[1,2]"), FormatError);
  CHECK_THROWS_AS(parse_table_json(R"({"page_title":"x"})"), FormatError);
  // Row width must match the column count.
  CHECK_THROWS_AS(parse_table_json(R"({
    "table_id":"t","page_title":"p","topic_area":"a",
    "columns":[{"header":"A"},{"header":"B"}],
    "rows":[[{"text":"only one"}]]
  })"),
                  FormatError);
  // Empty columns array.
  CHECK_THROWS_AS(parse_table_json(R"({
    "table_id":"t","page_title":"p","topic_area":"a",
    "columns":[],"rows":[]
  })"),
                  FormatError);
  // Links must be non-empty strings.
  CHECK_THROWS_AS(parse_table_json(R"({
    "table_id":"t","page_title":"p","topic_area":"a",
    "columns":[{"header":"A"}],
    "rows":[[{"text":"x","entity":""}]]
  })"),
                  FormatError);
}

TEST_CASE("load_tables_dir walks files in name order and rejects duplicates") {
  TempDir dir;
  write_file(dir.file("b.json"),
             table_json("t2", "Second", "A", {"K", "V"}, {{"a", "b"}}));
  write_file(dir.file("a.json"),
             table_json("t1", "First", "A", {"K", "V"}, {{"a", "b"}}));
  write_file(dir.file("notes.txt"), "not a table");
  auto tables = load_tables_dir(dir.path());
  REQUIRE(tables.size() == 2);
  CHECK(tables[0].table_id == "t1");
  CHECK(tables[1].table_id == "t2");

  write_file(dir.file("c.json"),
             table_json("t1", "Copy", "A", {"K", "V"}, {{"a", "b"}}));
  CHECK_THROWS_AS(load_tables_dir(dir.path()), FormatError);
  CHECK_THROWS_AS(load_tables_dir(dir.path() / "missing"), IoError);
}

// ---------------------------------------------------------------------------
// Key-column detection

TEST_CASE("detect_key_column picks the unique descriptive column") {
  auto books = make_table(
      "t", "Books", "Lit", {"Title", "Author", "Year"},
      {{"Dune", "Herbert", "1965"},
       {"Emma", "Austen", "1815"},
       {"Hamlet", "Shakespeare", "1600"},
       {"Ulysses", "Joyce", "1922"},
       {"Walden", "Thoreau", "1854"}});
  CHECK(detect_key_column(books) == 0);
}

TEST_CASE("detect_key_column prefers the leftmost qualifying column") {
  // Genre repeats, so the first qualifying column is Title, not Author.
  auto shelf = make_table(
      "t", "Shelf", "Lit", {"Genre", "Title", "Author"},
      {{"Fiction", "Dune", "Herbert"},
       {"Fiction", "Emma", "Austen"},
       {"Fiction", "Hamlet", "Shakespeare"},
       {"Fiction", "Ulysses", "Joyce"}});
  CHECK(detect_key_column(shelf) == 1);
}

TEST_CASE("detect_key_column enforces length and fill thresholds") {
  // Unique but too short on average (2 code points < 3).
  auto codes = make_table("t", "Codes", "Misc", {"Code", "Group"},
                          {{"A1", "g"}, {"B2", "g"}, {"C3", "g"}});
  CHECK(detect_key_column(codes) == std::nullopt);

  // Exactly at the lower length bound qualifies.
  auto names = make_table("t", "Names", "Misc", {"Name", "Group"},
                          {{"Ace", "g"}, {"Bob", "g"}, {"Cat", "g"}});
  CHECK(detect_key_column(names) == 0);

  // Average length above 200 disqualifies.
  std::vector<std::vector<std::string>> long_rows;
  for (int i = 0; i < 3; ++i)
    long_rows.push_back({std::string(201, 'a' + i), "g"});
  auto essays = make_table("t", "Essays", "Misc", {"Text", "Group"},
                           std::move(long_rows));
  CHECK(detect_key_column(essays) == std::nullopt);

  // Two empty cells in ten rows: 0.8 fill < 0.9.
  std::vector<std::vector<std::string>> holes;
  for (int i = 0; i < 8; ++i)
    holes.push_back({"Item" + std::to_string(i), "g"});
  holes.push_back({"", "g"});
  holes.push_back({"   ", "g"});
  auto sparse = make_table("t", "Sparse", "Misc", {"Item", "Group"},
                           std::move(holes));
  CHECK(detect_key_column(sparse) == std::nullopt);

  // Degenerate shapes never have a key column.
  auto one_col = make_table("t", "One", "Misc", {"K"}, {{"a"}, {"b"}});
  CHECK(detect_key_column(one_col) == std::nullopt);
  auto one_row =
      make_table("t", "Row", "Misc", {"K", "V"}, {{"alpha", "beta"}});
  CHECK(detect_key_column(one_row) == std::nullopt);
}

TEST_CASE("detect_key_column counts code points of trimmed text") {
  // "Ulm" padded with spaces still counts 3; two-byte letters count once.
  auto cities = make_table("t", "Cities", "Geo", {"City", "Land"},
                           {{" Ulm ", "DE"},
                            {"Gera", "DE"},
                            {"Jena", "DE"}});
  CHECK(detect_key_column(cities) == 0);
  auto greek = make_table("t", "Greek", "Geo", {"Word", "Tag"},
                          {{"αβω", "t"}, {"γδε", "t"}, {"ζηθ", "t"}});
  CHECK(detect_key_column(greek) == 0);
}

TEST_CASE("detect_key_column moves with row and column permutations") {
  const std::vector<std::vector<std::string>> rows = {
      {"x", "Dune", "1965"},
      {"x", "Emma", "1815"},
      {"x", "Hamlet", "1600"}};
  auto base = make_table("t", "T", "A", {"Tag", "Title", "Year"}, rows);
  REQUIRE(detect_key_column(base) == 1);

  auto reversed_rows = rows;
  std::reverse(reversed_rows.begin(), reversed_rows.end());
  auto shuffled =
      make_table("t", "T", "A", {"Tag", "Title", "Year"}, reversed_rows);
  CHECK(detect_key_column(shuffled) == 1);

  std::vector<std::vector<std::string>> swapped;
  for (const auto& r : rows) swapped.push_back({r[1], r[0], r[2]});
  auto moved = make_table("t", "T", "A", {"Title", "Tag", "Year"}, swapped);
  CHECK(detect_key_column(moved) == 0);
}

// ---------------------------------------------------------------------------
// Judgment generation

TEST_CASE("generate_judgments emits one tuple per fully linked row") {
  auto cities = make_table(
      "t9", "Capitals", "Geo", {"City", "Country", "Population"},
      {{"Berlin@eBER", "Germany@eDE", "3.6M"},
       {"Paris@ePAR", "France@eFR", "2.1M"},
       {"Madrid@eMAD", "Spain@eES", "3.2M"},
       {"Rome@eROM", "Italy@eIT", "2.8M"}});
  auto result = generate_judgments(cities, 0, {1});
  CHECK(result.stub.query_id == "stub_t9_0_1");
  CHECK(result.stub.source_table == "t9");
  CHECK(result.stub.nl_text.empty());
  CHECK(result.stub.components ==
        std::vector<std::string>{"City", "", "Country"});
  CHECK(result.skipped_rows == 0);
  REQUIRE(result.qrels.size() == 4);
  CHECK(result.qrels[0].tuple == std::vector<std::string>{"eBER", "eDE"});
  CHECK(result.qrels[3].tuple == std::vector<std::string>{"eROM", "eIT"});
  for (const auto& q : result.qrels) CHECK(q.query_id == "stub_t9_0_1");
}

TEST_CASE("generate_judgments skips partial rows and keeps the count law") {
  auto cities = make_table(
      "t9", "Capitals", "Geo", {"City", "Country"},
      {{"Berlin@eBER", "Germany@eDE"},
       {"Paris@ePAR", "France@eFR"},
       {"Madrid@eMAD", "Spain@eES"},
       {"Rome@eROM", "Italy@eIT"},
       {"Kyoto@eKYO", "Japan"}});  // country unlinked: 4/5 = 0.8 still allowed
  auto result = generate_judgments(cities, 0, {1});
  CHECK(result.qrels.size() == 4);
  CHECK(result.skipped_rows == 1);
  CHECK(result.qrels.size() + result.skipped_rows == cities.rows.size());
}

TEST_CASE("generate_judgments builds triples from two non-key columns") {
  auto t = make_table(
      "t3", "Routes", "Transit", {"Line", "From", "To"},
      {{"S1@eS1", "Ulm@eULM", "Gera@eGER"},
       {"S2@eS2", "Jena@eJEN", "Bonn@eBON"}});
  auto result = generate_judgments(t, 0, {1, 2});
  CHECK(result.stub.query_id == "stub_t3_0_1_2");
  CHECK(result.stub.components ==
        std::vector<std::string>{"Line", "", "From", "", "To"});
  REQUIRE(result.qrels.size() == 2);
  CHECK(result.qrels[1].tuple ==
        std::vector<std::string>{"eS2", "eJEN", "eBON"});
}

TEST_CASE("generate_judgments refuses sparsely linked columns") {
  auto t = make_table("t4", "Half", "Misc", {"K", "V"},
                      {{"a@e1", "x@e2"}, {"b@e3", "y"}});  // V: 1/2 linked
  CHECK_THROWS_WITH_AS(generate_judgments(t, 0, {1}),
                       doctest::Contains("generation refused"), FormatError);
  // An explicit lower bar lets the same table through.
  auto relaxed = generate_judgments(t, 0, {1}, 0.5);
  CHECK(relaxed.qrels.size() == 1);
  CHECK(relaxed.skipped_rows == 1);
}

TEST_CASE("generate_judgments validates the column choice") {
  auto t = make_table("t5", "T", "A", {"K", "V"}, {{"a@e1", "b@e2"}});
  CHECK_THROWS_AS(generate_judgments(t, 0, {}), std::invalid_argument);
  CHECK_THROWS_AS(generate_judgments(t, 0, {1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(generate_judgments(t, 0, {0}), std::invalid_argument);
  CHECK_THROWS_AS(generate_judgments(t, 0, {7}), std::invalid_argument);
  CHECK_THROWS_AS(generate_judgments(t, 0, {1, 2, 3}), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Title similarity and sampling

TEST_CASE("jaccard_title_similarity compares normalized token sets") {
  CHECK(jaccard_title_similarity("List of lakes", "List of rivers") == 0.5);
  CHECK(jaccard_title_similarity("List of lakes", "list of LAKES") == 1.0);
  CHECK(jaccard_title_similarity("Alpha", "Beta") == 0.0);
  CHECK(jaccard_title_similarity("", "") == 0.0);
  CHECK(jaccard_title_similarity("Alpha", "") == 0.0);
  // Token sets, not bags: repetition is irrelevant.
  CHECK(jaccard_title_similarity("lakes lakes lakes", "lakes") == 1.0);

  SplitMix64 rng(0x3a11);
  const std::vector<std::string> words = {"list", "of", "lakes", "rivers",
                                          "peaks", "in", "finland"};
  for (int trial = 0; trial < 25; ++trial) {
    std::string a, b;
    for (int i = 0; i < 4; ++i) {
      a += words[rng.bounded(words.size())] + " ";
      b += words[rng.bounded(words.size())] + " ";
    }
    const double ab = jaccard_title_similarity(a, b);
    CHECK(ab == jaccard_title_similarity(b, a));
    CHECK(ab >= 0.0);
    CHECK(ab <= 1.0);
    CHECK(jaccard_title_similarity(a, a) == 1.0);
  }
}

TEST_CASE("stratified_sample alternates topic areas in sorted order") {
  std::vector<SourceTable> tables = {
      title_table("t1", "Bridges of Bern", "zeta"),
      title_table("t2", "Castles of Spain", "zeta"),
      title_table("t3", "Lakes of Finland", "alpha"),
      title_table("t4", "Peaks of Nepal", "alpha")};
  auto picked = stratified_sample(tables, 4, 0.5, 7);
  REQUIRE(picked.size() == 4);
  // One candidate per area per turn, areas in sorted order: alpha then zeta.
  CHECK(tables[picked[0]].topic_area == "alpha");
  CHECK(tables[picked[1]].topic_area == "zeta");
  CHECK(tables[picked[2]].topic_area == "alpha");
  CHECK(tables[picked[3]].topic_area == "zeta");

  // Same seed, same selection; the draw is a pure function of its inputs.
  CHECK(stratified_sample(tables, 4, 0.5, 7) == picked);

  auto two = stratified_sample(tables, 2, 0.5, 7);
  REQUIRE(two.size() == 2);
  CHECK(two[0] == picked[0]);
  CHECK(two[1] == picked[1]);
}

TEST_CASE("stratified_sample deduplicates near-identical titles") {
  std::vector<SourceTable> tables;
  for (int i = 0; i < 5; ++i)
    tables.push_back(title_table("t" + std::to_string(i),
                                 "List of lakes of Finland", "geo"));
  auto picked = stratified_sample(tables, 5, 0.7, 1);
  CHECK(picked.size() == 1);

  // Exactly at the threshold is rejected; admission needs strictly less.
  std::vector<SourceTable> edge = {
      title_table("a", "c1 c2 c3 c4 c5 c6 c7 u1", "geo"),
      title_table("b", "c1 c2 c3 c4 c5 c6 c7 v1 v2", "geo")};
  REQUIRE(jaccard_title_similarity(edge[0].page_title,
                                   edge[1].page_title) == 0.7);
  CHECK(stratified_sample(edge, 2, 0.7, 1).size() == 1);
  CHECK(stratified_sample(edge, 2, 0.7000001, 1).size() == 2);
}

TEST_CASE("stratified_sample admits only dissimilar titles") {
  // Titles drawn from a tiny pool guarantee plenty of near-duplicates.
  const std::vector<std::string> words = {"list", "of",    "lakes",
                                          "peaks", "spain", "nepal"};
  std::vector<SourceTable> tables;
  SplitMix64 gen(0xfeed);
  for (int i = 0; i < 30; ++i) {
    std::string title;
    for (int w = 0; w < 3; ++w)
      title += words[gen.bounded(words.size())] + " ";
    tables.push_back(title_table("t" + std::to_string(i), title,
                                 "area" + std::to_string(i % 3)));
  }
  for (std::uint64_t seed : {1ull, 2ull, 99ull}) {
    auto picked = stratified_sample(tables, 30, 0.5, seed);
    CHECK(!picked.empty());
    std::set<std::size_t> unique(picked.begin(), picked.end());
    CHECK(unique.size() == picked.size());
    for (std::size_t i = 0; i < picked.size(); ++i)
      for (std::size_t j = i + 1; j < picked.size(); ++j)
        CHECK(jaccard_title_similarity(tables[picked[i]].page_title,
                                       tables[picked[j]].page_title) < 0.5);
  }
  CHECK_THROWS_AS(stratified_sample(tables, 0, 0.5, 1),
                  std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Query and judgment files

TEST_CASE("load_queries reads JSONL and enforces the id schemes") {
  TempDir dir;
  write_file(dir.file("queries.jsonl"),
             R"({"query_id":"RELink_P_01","nl_text":"regiments of the Indian Army","components":["regiment","held by","Indian Army"],"source_table":"t1"})"
             "\n\n"
             R"({"query_id":"RELink_T_01","nl_text":"airports in Germany","components":["airport","located in","city","part of","country"]})"
             "\n"
             R"({"query_id":"custom_7","nl_text":"long chain","components":["a","r1","b","r2","c","r3","d"]})"
             "\n");
  auto queries = load_queries(dir.file("queries.jsonl"));
  REQUIRE(queries.size() == 3);
  CHECK(queries[0].source_table == "t1");
  CHECK(queries[1].source_table.empty());
  CHECK(query_arity(queries[0]) == 2);
  CHECK(query_arity(queries[1]) == 3);
  CHECK(query_arity(queries[2]) == 4);
}

TEST_CASE("load_queries rejects malformed records with line numbers") {
  TempDir dir;
  auto write_bad = [&](const std::string& body) {
    write_file(dir.file("q.jsonl"),
               R"({"query_id":"RELink_P_01","nl_text":"ok","components":["a","r","b"]})"
               "\n" +
                   body + "\n");
    return dir.file("q.jsonl");
  };

  CHECK(thrown_line([&] { load_queries(write_bad("{broken")); }) == 2);
  CHECK(thrown_line([&] {
          load_queries(write_bad(
              R"({"query_id":"q2","nl_text":"x","components":["a","r","b","r2"]})"));
        }) == 2);
  CHECK(thrown_line([&] {
          load_queries(write_bad(
              R"({"query_id":"q2","nl_text":"x","components":["a"]})"));
        }) == 2);
  // The id scheme pins the arity: a pair id cannot carry five components.
  CHECK(thrown_line([&] {
          load_queries(write_bad(
              R"({"query_id":"RELink_P_02","nl_text":"x","components":["a","r","b","r2","c"]})"));
        }) == 2);
  CHECK(thrown_line([&] {
          load_queries(write_bad(
              R"({"query_id":"RELink_T_02","nl_text":"x","components":["a","r","b"]})"));
        }) == 2);
  CHECK(thrown_line([&] {
          load_queries(write_bad(
              R"({"query_id":"RELink_P_01","nl_text":"dup","components":["a","r","b"]})"));
        }) == 2);
  CHECK(thrown_line([&] {
          load_queries(write_bad(
              R"({"query_id":"has space","nl_text":"x","components":["a","r","b"]})"));
        }) == 2);
  CHECK(thrown_line([&] {
          load_queries(write_bad(
              R"({"query_id":"q2","components":["a","r","b"]})"));
        }) == 2);
  CHECK(thrown_line([&] {
          load_queries(write_bad(
              R"({"query_id":"q2","nl_text":"x","components":["a","","b"]})"));
        }) == 2);
}

TEST_CASE("load_qrels keeps positive labels and drops zeros") {
  TempDir dir;
  write_file(dir.file("qrels.txt"),
             "RELink_P_01 0 eA|eB 1\n"
             "RELink_P_01 0 eA|eC 2\n"
             "RELink_P_01 0 eA|eD 0\n"
             "\n"
             "RELink_T_01 0 eA|eB|eC 1\n");
  auto qrels = load_qrels(dir.file("qrels.txt"));
  REQUIRE(qrels.size() == 3);
  CHECK(qrels[0].tuple == std::vector<std::string>{"eA", "eB"});
  CHECK(qrels[1].tuple == std::vector<std::string>{"eA", "eC"});
  CHECK(qrels[2].tuple == std::vector<std::string>{"eA", "eB", "eC"});
}

TEST_CASE("load_qrels rejects malformed lines with line numbers") {
  TempDir dir;
  auto load_one = [&](const std::string& line) {
    write_file(dir.file("qrels.txt"), "q1 0 eA|eB 1\n" + line + "\n");
    return thrown_line([&] { load_qrels(dir.file("qrels.txt")); });
  };
  CHECK(load_one("q1 0 eA|eB") == 2);            // 3 fields
  CHECK(load_one("q1 0 eA|eB 1 extra") == 2);    // 5 fields
  CHECK(load_one("q1 0 eA|eB -1") == 2);         // negative label
  CHECK(load_one("q1 0 eA|eB x") == 2);          // non-numeric label
  CHECK(load_one("q1 0 eA|eB 1x") == 2);         // trailing junk
  CHECK(load_one("q1 0 eA 1") == 2);             // tuple arity 1
  CHECK(load_one("q1 0 eA||eB 1") == 2);         // empty entity
  CHECK(load_one("q1 0 eA|eB 2") == 2);          // duplicate tuple
  // A zero-label line never registers, so a later positive line is fresh.
  write_file(dir.file("qrels.txt"), "q1 0 eA|eB 0\nq1 0 eA|eB 1\n");
  CHECK(load_qrels(dir.file("qrels.txt")).size() == 1);
}

TEST_CASE("load_qc cross-checks judgments against the query set") {
  TempDir dir;
  write_file(dir.file("queries.jsonl"),
             R"({"query_id":"RELink_P_01","nl_text":"x","components":["a","r","b"]})"
             "\n"
             R"({"query_id":"RELink_T_01","nl_text":"y","components":["a","r","b","s","c"]})"
             "\n");
  write_file(dir.file("qrels.txt"),
             "RELink_P_01 0 e1|e2 1\n"
             "RELink_T_01 0 e1|e2|e3 1\n");
  auto [queries, qrels] = load_qc(dir.file("queries.jsonl"),
                                  dir.file("qrels.txt"));
  CHECK(queries.size() == 2);
  CHECK(qrels.size() == 2);

  write_file(dir.file("qrels.txt"), "RELink_P_99 0 e1|e2 1\n");
  CHECK_THROWS_WITH_AS(
      load_qc(dir.file("queries.jsonl"), dir.file("qrels.txt")),
      doctest::Contains("unknown query_id"), FormatError);

  write_file(dir.file("qrels.txt"), "RELink_P_01 0 e1|e2|e3 1\n");
  CHECK_THROWS_WITH_AS(
      load_qc(dir.file("queries.jsonl"), dir.file("qrels.txt")),
      doctest::Contains("RELink_P_01"), FormatError);
}

// ---------------------------------------------------------------------------
// Statistics

TEST_CASE("collection_stats aggregates a hand-computed sample") {
  std::vector<QueryRecord> queries(3);
  queries[0].query_id = "RELink_P_01";
  queries[0].nl_text = "αβ";  // 2 code points, 4 bytes
  queries[0].components = {"X", "rel one", "Y"};
  queries[1].query_id = "RELink_T_01";
  queries[1].nl_text = "abcd";
  queries[1].components = {"X", "r", "Z", "s t", "W"};
  queries[2].query_id = "RELink_P_02";
  queries[2].nl_text = "abcdef";
  queries[2].components = {"Y", "rel one", "Z"};

  std::vector<QrelRecord> qrels = {
      {"RELink_P_01", {"e1", "e2"}},
      {"RELink_T_01", {"e1", "e2", "e3"}},
      {"RELink_T_01", {"e4", "e5", "e6"}},
      {"RELink_T_01", {"e7", "e8", "e9"}}};

  auto report = collection_stats(queries, qrels);
  CHECK(report.total_queries == 3);
  CHECK(report.pair_queries == 2);
  CHECK(report.triple_queries == 1);
  CHECK(report.avg_nl_length_all == doctest::Approx(4.0));     // (2+4+6)/3
  CHECK(report.avg_nl_length_pair == doctest::Approx(4.0));    // (2+6)/2
  CHECK(report.avg_nl_length_triple == doctest::Approx(4.0));  // 4/1
  // Entity components: X Y X Z W Y Z, one code point each.
  CHECK(report.avg_entity_component_length == doctest::Approx(1.0));
  // Relationship components: "rel one"(7) "r"(1) "s t"(3) "rel one"(7).
  CHECK(report.avg_relationship_component_length ==
        doctest::Approx(18.0 / 4.0));
  CHECK(report.unique_entity_types == 4);        // x y z w
  CHECK(report.unique_relationship_types == 3);  // "rel one" "r" "s t"
  CHECK(report.avg_judgments_all == doctest::Approx(4.0 / 3.0));
  CHECK(report.avg_judgments_pair == doctest::Approx(0.5));  // P_02 has none
  CHECK(report.avg_judgments_triple == doctest::Approx(3.0));
}

TEST_CASE("collection_stats normalizes component types before counting") {
  std::vector<QueryRecord> queries(2);
  queries[0].query_id = "q1";
  queries[0].nl_text = "a";
  queries[0].components = {"Regiment", "Held By", "Army"};
  queries[1].query_id = "q2";
  queries[1].nl_text = "b";
  queries[1].components = {"regiment", "held  by", "army!"};

  auto report = collection_stats(queries, {});
  // Case, extra spaces and edge punctuation wash out.
  CHECK(report.unique_entity_types == 2);
  CHECK(report.unique_relationship_types == 1);
  CHECK(report.avg_judgments_all == 0.0);
}

TEST_CASE("collection_stats on an empty collection is all zeros") {
  auto report = collection_stats({}, {});
  CHECK(report.total_queries == 0);
  CHECK(report.avg_nl_length_all == 0.0);
  CHECK(report.avg_judgments_all == 0.0);
}
