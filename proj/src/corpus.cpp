#include "ertk/corpus.hpp"

#include <algorithm>
#include <utility>

#include "json.hpp"

namespace ertk {

namespace {

using nlohmann::json;

const json& require_field(const json& j, const char* name, std::size_t line) {
  const auto it = j.find(name);
  if (it == j.end()) {
    throw FormatError(std::string("missing field \"") + name + "\"", line);
  }
  return *it;
}

std::string require_string(const json& j, const char* name, std::size_t line) {
  const json& f = require_field(j, name, line);
  if (!f.is_string()) {
    throw FormatError(std::string("field \"") + name + "\" must be a string",
                      line);
  }
  return f.get<std::string>();
}

std::uint64_t require_offset(const json& j, const char* name,
                             std::size_t line) {
  const json& f = require_field(j, name, line);
  if (!f.is_number_unsigned()) {
    throw FormatError(
        std::string("field \"") + name + "\" must be a non-negative integer",
        line);
  }
  return f.get<std::uint64_t>();
}

// Entity ids end up in whitespace-separated, '|'-joined run and qrels lines,
// so those characters cannot appear in them.
bool valid_entity_id(std::string_view id) {
  if (id.empty()) return false;
  for (const char c : id) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' ||
        c == '\f' || c == '|') {
      return false;
    }
  }
  return true;
}

bool blank_line(std::string_view line) {
  return line.find_first_not_of(" \t\r") == std::string_view::npos;
}

// Emits the normalized tokens of cps[lo, hi) into out. Tokens are maximal
// non-whitespace runs with edge punctuation stripped; spans are byte offsets
// of the stripped run.
void tokenize_range(std::string_view text, const std::vector<CodePoint>& cps,
                    std::size_t lo, std::size_t hi,
                    const TokenizerOptions& options, std::vector<Token>* out) {
  std::size_t i = lo;
  while (i < hi) {
    while (i < hi && is_unicode_space(cps[i].cp)) ++i;
    std::size_t a = i;
    while (i < hi && !is_unicode_space(cps[i].cp)) ++i;
    std::size_t b = i;
    while (a < b && is_edge_punct(cps[a].cp)) ++a;
    while (b > a && is_edge_punct(cps[b - 1].cp)) --b;
    if (a == b) continue;
    const std::uint32_t begin = cps[a].begin;
    const std::uint32_t end = cps[b - 1].end;
    std::string term = ascii_lower(text.substr(begin, end - begin));
    if (options.stopwords.count(term)) continue;
    out->push_back(Token{std::move(term), begin, end});
  }
}

}  // namespace

AnnotatedDocument parse_document_record(std::string_view line,
                                        std::size_t line_no) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw FormatError(std::string("invalid JSON: ") + e.what(), line_no);
  }
  if (!j.is_object()) throw FormatError("record is not a JSON object", line_no);

  AnnotatedDocument doc;
  doc.doc_id = require_string(j, "doc_id", line_no);
  if (doc.doc_id.empty()) throw FormatError("doc_id is empty", line_no);
  doc.text = require_string(j, "text", line_no);
  if (doc.text.size() > 0xFFFFFFFFull) {
    throw FormatError("document text exceeds 4 GiB", line_no);
  }

  const json& anns = require_field(j, "annotations", line_no);
  if (!anns.is_array()) {
    throw FormatError("field \"annotations\" must be an array", line_no);
  }
  doc.annotations.reserve(anns.size());
  for (std::size_t k = 0; k < anns.size(); ++k) {
    const json& a = anns[k];
    const std::string where = "annotation " + std::to_string(k);
    if (!a.is_object()) throw FormatError(where + " is not an object", line_no);
    EntityAnnotation ann;
    ann.entity = require_string(a, "entity", line_no);
    if (!valid_entity_id(ann.entity)) {
      throw FormatError(where + ": entity id \"" + ann.entity +
                            "\" is empty or contains whitespace or '|'",
                        line_no);
    }
    const std::uint64_t begin = require_offset(a, "begin", line_no);
    const std::uint64_t end = require_offset(a, "end", line_no);
    if (begin >= end || end > doc.text.size()) {
      throw FormatError(where + ": span [" + std::to_string(begin) + ", " +
                            std::to_string(end) + ") out of range for text of " +
                            std::to_string(doc.text.size()) + " bytes",
                        line_no);
    }
    if (!is_char_boundary(doc.text, begin) ||
        !is_char_boundary(doc.text, end)) {
      throw FormatError(where + ": span does not fall on character boundaries",
                        line_no);
    }
    ann.begin = static_cast<std::uint32_t>(begin);
    ann.end = static_cast<std::uint32_t>(end);
    ann.surface = require_string(a, "surface", line_no);
    if (ann.surface !=
        std::string_view(doc.text).substr(ann.begin, ann.end - ann.begin)) {
      throw FormatError(
          where + ": surface \"" + ann.surface + "\" does not match text span",
          line_no);
    }
    doc.annotations.push_back(std::move(ann));
  }

  std::sort(doc.annotations.begin(), doc.annotations.end(),
            [](const EntityAnnotation& a, const EntityAnnotation& b) {
              return std::tie(a.begin, a.end, a.entity) <
                     std::tie(b.begin, b.end, b.entity);
            });

  // Spans must be nested or disjoint. Scan in (begin asc, end desc) order
  // with a stack of open spans; a span that starts inside the innermost open
  // span but ends beyond it partially overlaps.
  std::vector<const EntityAnnotation*> view;
  view.reserve(doc.annotations.size());
  for (const auto& a : doc.annotations) view.push_back(&a);
  std::sort(view.begin(), view.end(),
            [](const EntityAnnotation* a, const EntityAnnotation* b) {
              if (a->begin != b->begin) return a->begin < b->begin;
              return a->end > b->end;
            });
  std::vector<std::uint32_t> open;
  for (const EntityAnnotation* a : view) {
    while (!open.empty() && open.back() <= a->begin) open.pop_back();
    if (!open.empty() && a->end > open.back()) {
      throw FormatError("annotation spans partially overlap near byte " +
                            std::to_string(a->begin),
                        line_no);
    }
    open.push_back(a->end);
  }
  return doc;
}

std::string canonical_record(const AnnotatedDocument& doc) {
  json anns = json::array();
  for (const auto& a : doc.annotations) {
    anns.push_back({{"entity", a.entity},
                    {"begin", a.begin},
                    {"end", a.end},
                    {"surface", a.surface}});
  }
  const json j{
      {"doc_id", doc.doc_id}, {"text", doc.text}, {"annotations", anns}};
  return j.dump();
}

CorpusReader::CorpusReader(const std::filesystem::path& path,
                           IngestConfig config)
    : in_(path, std::ios::binary), path_(path.string()), config_(config) {
  if (!in_) throw IoError("cannot open " + path_);
}

std::optional<AnnotatedDocument> CorpusReader::next() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_no_;
    ++report_.lines;
    if (blank_line(line)) continue;
    try {
      AnnotatedDocument doc = parse_document_record(line, line_no_);
      if (!seen_ids_.insert(doc.doc_id).second) {
        throw FormatError("duplicate doc_id \"" + doc.doc_id + "\"", line_no_);
      }
      ++report_.documents;
      return doc;
    } catch (const FormatError& e) {
      if (config_.fail_fast) throw;
      report_.errors.push_back(
          IngestError{e.line() ? e.line() : line_no_, e.what()});
    }
  }
  if (in_.bad()) throw IoError("error reading " + path_);
  return std::nullopt;
}

std::vector<AnnotatedDocument> load_corpus(const std::filesystem::path& path,
                                           IngestConfig config,
                                           IngestReport* out_report) {
  CorpusReader reader(path, config);
  std::vector<AnnotatedDocument> docs;
  while (auto doc = reader.next()) docs.push_back(std::move(*doc));
  if (out_report) *out_report = reader.report();
  return docs;
}

std::vector<Sentence> segment_sentences(const AnnotatedDocument& doc,
                                        const TokenizerOptions& options) {
  std::vector<Sentence> out;
  if (doc.text.empty()) return out;
  const std::string_view text = doc.text;
  const std::vector<CodePoint> cps = decode_utf8(text);

  // Segment boundaries fall after terminal punctuation followed by
  // whitespace or end of text; the remainder forms a final segment.
  std::vector<std::pair<std::size_t, std::size_t>> segments;
  std::size_t seg_lo = 0;
  for (std::size_t ci = 0; ci < cps.size(); ++ci) {
    const char32_t c = cps[ci].cp;
    if (c == U'.' || c == U'!' || c == U'?') {
      if (ci + 1 == cps.size() || is_unicode_space(cps[ci + 1].cp)) {
        segments.emplace_back(seg_lo, ci + 1);
        seg_lo = ci + 1;
      }
    }
  }
  if (seg_lo < cps.size()) segments.emplace_back(seg_lo, cps.size());

  for (auto [lo, hi] : segments) {
    while (lo < hi && is_unicode_space(cps[lo].cp)) ++lo;
    while (hi > lo && is_unicode_space(cps[hi - 1].cp)) --hi;
    if (lo == hi) continue;
    Sentence s;
    s.doc_id = doc.doc_id;
    s.sent_index = static_cast<std::uint32_t>(out.size());
    s.begin = cps[lo].begin;
    s.end = cps[hi - 1].end;
    tokenize_range(text, cps, lo, hi, options, &s.tokens);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<EntityAnnotation> annotations_in_sentence(
    const AnnotatedDocument& doc, const Sentence& s) {
  std::vector<EntityAnnotation> out;
  for (const auto& a : doc.annotations) {
    if (a.begin >= s.begin && a.end <= s.end) out.push_back(a);
  }
  return out;
}

std::size_t count_straddling(const AnnotatedDocument& doc,
                             const std::vector<Sentence>& sentences) {
  std::size_t n = 0;
  for (const auto& a : doc.annotations) {
    bool contained = false;
    for (const auto& s : sentences) {
      if (a.begin >= s.begin && a.end <= s.end) {
        contained = true;
        break;
      }
    }
    if (!contained) ++n;
  }
  return n;
}

std::vector<std::string> normalize_terms(std::string_view text,
                                         const TokenizerOptions& options) {
  std::vector<std::string> out;
  if (text.empty()) return out;
  const std::vector<CodePoint> cps = decode_utf8(text);
  std::vector<Token> tokens;
  tokenize_range(text, cps, 0, cps.size(), options, &tokens);
  out.reserve(tokens.size());
  for (auto& t : tokens) out.push_back(std::move(t.term));
  return out;
}

}  // namespace ertk
