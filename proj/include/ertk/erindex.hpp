#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ertk/extraction.hpp"

namespace ertk {

struct Posting {
  std::uint64_t unit_id = 0;
  std::uint32_t tf = 0;
  // 0-based term positions within the unit, strictly increasing;
  // positions.size() == tf. Kept per unit so window features never see
  // adjacencies across unit boundaries.
  std::vector<std::uint32_t> positions;

  bool operator==(const Posting&) const = default;
};

struct UnitInfo {
  UnitKey group;
  std::uint32_t length = 0;

  bool operator==(const UnitInfo&) const = default;
};

// Build-time aggregate over all units sharing a group key.
struct GroupProfile {
  std::vector<std::uint64_t> unit_ids;  // sorted ascending
  std::uint64_t total_length = 0;
  // Sum of max(length - 1, 0) over member units: the number of adjacent
  // bigram slots the group offers.
  std::uint64_t bigram_slots = 0;
  std::map<std::string, std::uint64_t> term_freq;

  bool operator==(const GroupProfile&) const = default;
};

struct CollectionStats {
  std::uint64_t total_terms = 0;
  std::uint64_t unit_count = 0;
  std::uint64_t group_count = 0;
  std::uint64_t bigram_slots_total = 0;
  std::map<std::string, std::uint64_t> term_cf;
  // Ordered adjacent term pairs within units.
  std::map<std::pair<std::string, std::string>, std::uint64_t> bigram_cf;

  bool operator==(const CollectionStats&) const = default;
};

// One inverted index over either entity units or pair units. Immutable after
// build/load; safe for unlimited concurrent readers.
struct IndexPartition {
  std::map<std::string, std::vector<Posting>, std::less<>> postings;
  std::unordered_map<std::uint64_t, UnitInfo> units;
  std::map<UnitKey, GroupProfile> groups;
  CollectionStats stats;

  bool operator==(const IndexPartition&) const = default;
};

// Exact postings for a term; empty list when absent.
const std::vector<Posting>& lookup_postings(const IndexPartition& partition,
                                            std::string_view term);

// Group key of a unit, or nullptr for an unknown unit id.
const UnitKey* group_of(const IndexPartition& partition, std::uint64_t unit_id);

// Stored aggregate of a group, or nullptr for an unknown key (distinct from
// a group that exists with empty terms).
const GroupProfile* group_profile(const IndexPartition& partition,
                                  const UnitKey& key);

struct IndexConfig {
  // Echoed to the manifest so querying can reuse the indexing-time
  // normalization settings.
  ExtractionConfig extraction;
};

struct ERIndex {
  IndexPartition entity;
  IndexPartition pair;
  IndexConfig config;
  // FNV over all unit ids in ascending order; identifies the extraction run.
  std::uint64_t units_hash = 0;
};

// Incremental builder. Output is independent of the order units are added:
// finish() sorts every posting list and group member list.
class IndexBuilder {
 public:
  explicit IndexBuilder(IndexConfig config = {});

  // Routes the unit into the entity or pair partition. Duplicate unit ids
  // mean the stream does not come from a single extraction run; fatal.
  void add(const ExtractionUnit& unit);

  ERIndex finish();

 private:
  ERIndex index_;
  bool finished_ = false;
};

ERIndex build_index(const std::vector<ExtractionUnit>& units,
                    IndexConfig config = {});

// Persists the index as one manifest (manifest.json + manifest.fnv sidecar)
// plus four checksummed binary sections per partition. Byte-identical output
// for identical indexes. On failure, files already written are removed.
void save_index(const ERIndex& index, const std::filesystem::path& dir);

// Rejects unknown format versions (naming both versions), checksum
// mismatches, truncated files, and manifest/section count disagreements.
// Any single corrupted byte in the directory is detected.
ERIndex load_index(const std::filesystem::path& dir);

}  // namespace ertk
