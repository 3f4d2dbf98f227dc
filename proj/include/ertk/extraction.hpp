#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ertk/corpus.hpp"

namespace ertk {

enum class UnitKind : std::uint8_t { Entity = 1, Pair = 2 };

// Grouping key of an extraction unit: one entity id, or an oriented pair of
// distinct entity ids (second is empty for entity units). Pair orientation
// follows document order of the entities' first occurrences in the sentence.
struct UnitKey {
  std::string first;
  std::string second;

  bool operator==(const UnitKey&) const = default;
  auto operator<=>(const UnitKey&) const = default;
};

// One sentence-scoped extraction: the context terms seen for an entity or an
// entity pair. Term positions are implicit 0-based ranks in `terms`.
struct ExtractionUnit {
  std::uint64_t unit_id = 0;
  UnitKind kind = UnitKind::Entity;
  UnitKey key;
  std::vector<std::string> terms;
  std::string doc_id;
  std::uint32_t sent_index = 0;
};

struct ExtractionConfig {
  TokenizerOptions tokenizer;
  // Pairs whose separating string has more tokens than this are dropped.
  // Unset means no cutoff.
  std::optional<std::size_t> max_pair_separation;
};

// Content-derived unit identity: a stable function of (kind, doc_id,
// sent_index, key). Re-extraction of the same corpus reproduces identical
// ids regardless of tokenizer options or processing order.
std::uint64_t unit_id_for(UnitKind kind, std::string_view doc_id,
                          std::uint32_t sent_index, const UnitKey& key);

// One unit per (sentence, distinct entity): all sentence tokens except those
// overlapping any span of that entity in the sentence. Units are emitted per
// sentence in entity-id order.
std::vector<ExtractionUnit> extract_entity_units(
    const AnnotatedDocument& doc, const std::vector<Sentence>& sentences);

// One unit per (sentence, unordered pair of distinct co-occurring entities):
// the tokens strictly between the closest occurrence pair, keyed in
// first-occurrence document order. Units are emitted per sentence in key
// order.
std::vector<ExtractionUnit> extract_pair_units(
    const AnnotatedDocument& doc, const std::vector<Sentence>& sentences,
    const ExtractionConfig& config = {});

struct ExtractionResult {
  // Canonical order: by sentence, entity units before pair units, each block
  // sorted by key.
  std::vector<ExtractionUnit> units;
  std::size_t sentences = 0;
  // Annotations not contained in any sentence (they join no unit).
  std::size_t straddling = 0;
};

// Segments and extracts one document.
ExtractionResult extract_document(const AnnotatedDocument& doc,
                                  const ExtractionConfig& config = {});

// JSONL dump of units for inspection and oracle tests. unit_id is serialized
// as 16 hex digits (JSON numbers cannot carry 64 bits); the reader recomputes
// every id from the other fields and rejects mismatches.
std::string unit_to_json(const ExtractionUnit& unit);
void write_units_jsonl(const std::filesystem::path& path,
                       const std::vector<ExtractionUnit>& units);
std::vector<ExtractionUnit> read_units_jsonl(
    const std::filesystem::path& path);

}  // namespace ertk
