#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "ertk/corpus.hpp"
#include "ertk/extraction.hpp"

namespace ertk::testing {

struct Mention {
  std::string entity;
  std::string surface;
  std::size_t occurrence = 0;  // 0-based occurrence of `surface` in the text
};

// Builds a document record with annotation offsets located by searching for
// the surface string, then runs it through the real parser so every fixture
// is validated input.
inline AnnotatedDocument fixture_doc(const std::string& doc_id,
                                     const std::string& text,
                                     const std::vector<Mention>& mentions) {
  nlohmann::json rec{{"doc_id", doc_id},
                     {"text", text},
                     {"annotations", nlohmann::json::array()}};
  for (const Mention& m : mentions) {
    std::size_t pos = std::string::npos;
    std::size_t from = 0;
    for (std::size_t left = m.occurrence + 1; left > 0; --left) {
      pos = text.find(m.surface, from);
      if (pos == std::string::npos)
        throw std::logic_error("fixture surface \"" + m.surface +
                               "\" occurrence " +
                               std::to_string(m.occurrence) + " not in \"" +
                               doc_id + "\"");
      from = pos + 1;
    }
    rec["annotations"].push_back({{"entity", m.entity},
                                  {"begin", pos},
                                  {"end", pos + m.surface.size()},
                                  {"surface", m.surface}});
  }
  return parse_document_record(rec.dump());
}

// Small fixed corpus used across retrieval-level tests: repeated mentions,
// nested annotations, a four-entity sentence, an empty entity unit, and one
// entity that never co-occurs with another.
inline std::vector<AnnotatedDocument> fixture_corpus() {
  std::vector<AnnotatedDocument> docs;
  docs.push_back(fixture_doc(
      "d1", "Ford was founded by Henry Ford in Detroit. Ford builds rugged "
            "trucks in Detroit.",
      {{"eFord", "Ford", 0},
       {"eFord", "Ford", 2},
       {"eHenry", "Henry Ford", 0},
       {"eDetroit", "Detroit", 0},
       {"eDetroit", "Detroit", 1}}));
  docs.push_back(fixture_doc(
      "d2", "Tesla was founded by Elon Musk. Tesla builds electric cars. "
            "Elon Musk lives near Tesla.",
      {{"eTesla", "Tesla", 0},
       {"eTesla", "Tesla", 1},
       {"eTesla", "Tesla", 2},
       {"eElon", "Elon Musk", 0},
       {"eElon", "Elon Musk", 1}}));
  docs.push_back(fixture_doc(
      "d3", "BMW is headquartered in Bavaria. BMW builds sporty sedans. "
            "Bavaria hosts BMW factories.",
      {{"eBMW", "BMW", 0},
       {"eBMW", "BMW", 1},
       {"eBMW", "BMW", 2},
       {"eBavaria", "Bavaria", 0},
       {"eBavaria", "Bavaria", 1}}));
  docs.push_back(fixture_doc(
      "d4", "Ford and Tesla compete in America. Tesla overtook Ford in "
            "market value.",
      {{"eFord", "Ford", 0},
       {"eFord", "Ford", 1},
       {"eTesla", "Tesla", 0},
       {"eTesla", "Tesla", 1},
       {"eAmerica", "America", 0}}));
  docs.push_back(fixture_doc(
      "d5", "Elon Musk visited Detroit. Elon Musk met Ford engineers near "
            "Detroit.",
      {{"eElon", "Elon Musk", 0},
       {"eElon", "Elon Musk", 1},
       {"eFord", "Ford", 0},
       {"eDetroit", "Detroit", 0},
       {"eDetroit", "Detroit", 1}}));
  docs.push_back(fixture_doc("d6", "The garage! Tesla.",
                             {{"eTesla", "Tesla", 0}}));
  docs.push_back(fixture_doc(
      "d7", "Ford, Tesla and BMW showed cars at the Detroit show.",
      {{"eFord", "Ford", 0},
       {"eTesla", "Tesla", 0},
       {"eBMW", "BMW", 0},
       {"eDetroit", "Detroit", 0}}));
  docs.push_back(fixture_doc(
      "d8", "Ikarus built buses. Ikarus buses served many cities.",
      {{"eIkarus", "Ikarus", 0}, {"eIkarus", "Ikarus", 1}}));
  return docs;
}

inline std::vector<ExtractionUnit> fixture_units(
    const ExtractionConfig& config = {}) {
  std::vector<ExtractionUnit> units;
  for (const auto& doc : fixture_corpus()) {
    auto result = extract_document(doc, config);
    units.insert(units.end(), result.units.begin(), result.units.end());
  }
  return units;
}

}  // namespace ertk::testing
