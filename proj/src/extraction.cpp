#include "ertk/extraction.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <tuple>
#include <utility>

#include "json.hpp"

namespace ertk {

namespace {

using nlohmann::json;

struct Span {
  std::uint32_t begin = 0;
  std::uint32_t end = 0;
};

// Occurrence spans per distinct entity, in (begin, end) order. Relies on
// annotations_in_sentence returning normalized order.
std::map<std::string, std::vector<Span>> occurrences(
    const AnnotatedDocument& doc, const Sentence& s) {
  std::map<std::string, std::vector<Span>> occ;
  for (const auto& a : annotations_in_sentence(doc, s)) {
    occ[a.entity].push_back(Span{a.begin, a.end});
  }
  return occ;
}

bool span_before(const Span& a, const Span& b) {
  return std::tie(a.begin, a.end) < std::tie(b.begin, b.end);
}

}  // namespace

std::uint64_t unit_id_for(UnitKind kind, std::string_view doc_id,
                          std::uint32_t sent_index, const UnitKey& key) {
  Fnv1a64 h;
  h.update_u8(static_cast<std::uint8_t>(kind));
  h.update_u64(doc_id.size());
  h.update(doc_id);
  h.update_u32(sent_index);
  h.update_u64(key.first.size());
  h.update(key.first);
  if (kind == UnitKind::Pair) {
    h.update_u64(key.second.size());
    h.update(key.second);
  }
  return h.digest();
}

std::vector<ExtractionUnit> extract_entity_units(
    const AnnotatedDocument& doc, const std::vector<Sentence>& sentences) {
  std::vector<ExtractionUnit> out;
  for (const Sentence& s : sentences) {
    for (const auto& [entity, spans] : occurrences(doc, s)) {
      ExtractionUnit u;
      u.kind = UnitKind::Entity;
      u.key = UnitKey{entity, {}};
      u.doc_id = doc.doc_id;
      u.sent_index = s.sent_index;
      u.unit_id = unit_id_for(u.kind, u.doc_id, u.sent_index, u.key);
      for (const Token& t : s.tokens) {
        bool overlaps_own = false;
        for (const Span& sp : spans) {
          if (t.begin < sp.end && sp.begin < t.end) {
            overlaps_own = true;
            break;
          }
        }
        if (!overlaps_own) u.terms.push_back(t.term);
      }
      out.push_back(std::move(u));
    }
  }
  return out;
}

std::vector<ExtractionUnit> extract_pair_units(
    const AnnotatedDocument& doc, const std::vector<Sentence>& sentences,
    const ExtractionConfig& config) {
  std::vector<ExtractionUnit> out;
  for (const Sentence& s : sentences) {
    const auto occ = occurrences(doc, s);
    if (occ.size() < 2) continue;
    std::vector<ExtractionUnit> sentence_units;
    for (auto ia = occ.begin(); ia != occ.end(); ++ia) {
      for (auto ib = std::next(ia); ib != occ.end(); ++ib) {
        // Closest occurrence pair decides the separating string. Distance is
        // the byte gap between spans (0 when they touch or nest); ties go to
        // the textually first pair.
        Span be{};
        Span bl{};
        std::uint32_t best_dist = 0;
        bool have = false;
        for (const Span& a : ia->second) {
          for (const Span& b : ib->second) {
            const bool a_earlier = span_before(a, b) || !span_before(b, a);
            const Span& e = a_earlier ? a : b;
            const Span& l = a_earlier ? b : a;
            const std::uint32_t d = l.begin > e.end ? l.begin - e.end : 0;
            if (!have || d < best_dist ||
                (d == best_dist &&
                 std::tie(e.begin, l.begin, e.end, l.end) <
                     std::tie(be.begin, bl.begin, be.end, bl.end))) {
              have = true;
              best_dist = d;
              be = e;
              bl = l;
            }
          }
        }

        ExtractionUnit u;
        u.kind = UnitKind::Pair;
        u.doc_id = doc.doc_id;
        u.sent_index = s.sent_index;
        // Orientation comes from the first occurrences, not the closest
        // pair. Identical first spans fall back to id order.
        const Span& fa = ia->second.front();
        const Span& fb = ib->second.front();
        const bool a_first = span_before(fa, fb) || !span_before(fb, fa);
        u.key = a_first ? UnitKey{ia->first, ib->first}
                        : UnitKey{ib->first, ia->first};
        u.unit_id = unit_id_for(u.kind, u.doc_id, u.sent_index, u.key);
        for (const Token& t : s.tokens) {
          if (t.begin >= be.end && t.end <= bl.begin) u.terms.push_back(t.term);
        }
        if (config.max_pair_separation &&
            u.terms.size() > *config.max_pair_separation) {
          continue;
        }
        sentence_units.push_back(std::move(u));
      }
    }
    std::sort(sentence_units.begin(), sentence_units.end(),
              [](const ExtractionUnit& a, const ExtractionUnit& b) {
                return a.key < b.key;
              });
    for (auto& u : sentence_units) out.push_back(std::move(u));
  }
  return out;
}

ExtractionResult extract_document(const AnnotatedDocument& doc,
                                  const ExtractionConfig& config) {
  ExtractionResult r;
  const auto sentences = segment_sentences(doc, config.tokenizer);
  r.sentences = sentences.size();
  r.straddling = count_straddling(doc, sentences);
  r.units = extract_entity_units(doc, sentences);
  auto pairs = extract_pair_units(doc, sentences, config);
  r.units.insert(r.units.end(), std::make_move_iterator(pairs.begin()),
                 std::make_move_iterator(pairs.end()));
  std::sort(r.units.begin(), r.units.end(),
            [](const ExtractionUnit& a, const ExtractionUnit& b) {
              return std::tie(a.sent_index, a.kind, a.key) <
                     std::tie(b.sent_index, b.kind, b.key);
            });
  return r;
}

std::string unit_to_json(const ExtractionUnit& unit) {
  json j;
  j["unit_id"] = to_hex64(unit.unit_id);
  j["kind"] = unit.kind == UnitKind::Entity ? "entity" : "pair";
  if (unit.kind == UnitKind::Entity) {
    j["key"] = unit.key.first;
  } else {
    j["key"] = json::array({unit.key.first, unit.key.second});
  }
  j["terms"] = unit.terms;
  j["doc_id"] = unit.doc_id;
  j["sent_index"] = unit.sent_index;
  return j.dump();
}

void write_units_jsonl(const std::filesystem::path& path,
                       const std::vector<ExtractionUnit>& units) {
  std::string out;
  for (const auto& u : units) {
    out += unit_to_json(u);
    out.push_back('\n');
  }
  write_file(path, out);
}

std::vector<ExtractionUnit> read_units_jsonl(
    const std::filesystem::path& path) {
  const std::string data = read_file(path);
  std::vector<ExtractionUnit> out;
  std::istringstream in(data);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw FormatError(std::string("invalid JSON: ") + e.what(), line_no);
    }
    if (!j.is_object()) throw FormatError("unit is not an object", line_no);
    ExtractionUnit u;
    try {
      const std::string kind = j.at("kind").get<std::string>();
      if (kind == "entity") {
        u.kind = UnitKind::Entity;
        u.key.first = j.at("key").get<std::string>();
      } else if (kind == "pair") {
        u.kind = UnitKind::Pair;
        const json& key = j.at("key");
        if (!key.is_array() || key.size() != 2) {
          throw FormatError("pair key must be a two-element array", line_no);
        }
        u.key.first = key[0].get<std::string>();
        u.key.second = key[1].get<std::string>();
      } else {
        throw FormatError("unknown kind \"" + kind + "\"", line_no);
      }
      u.terms = j.at("terms").get<std::vector<std::string>>();
      u.doc_id = j.at("doc_id").get<std::string>();
      u.sent_index = j.at("sent_index").get<std::uint32_t>();
      const std::string id_hex = j.at("unit_id").get<std::string>();
      const auto id = parse_hex64(id_hex);
      if (!id) throw FormatError("unit_id \"" + id_hex + "\" is not 16 hex digits", line_no);
      u.unit_id = *id;
    } catch (const json::exception& e) {
      throw FormatError(std::string("bad unit record: ") + e.what(), line_no);
    }
    if (u.kind == UnitKind::Pair && u.key.first == u.key.second) {
      throw FormatError("pair unit with identical entities", line_no);
    }
    const std::uint64_t expect =
        unit_id_for(u.kind, u.doc_id, u.sent_index, u.key);
    if (expect != u.unit_id) {
      throw FormatError("unit_id " + to_hex64(u.unit_id) +
                            " does not match fields (expected " +
                            to_hex64(expect) + ")",
                        line_no);
    }
    out.push_back(std::move(u));
  }
  return out;
}

}  // namespace ertk
