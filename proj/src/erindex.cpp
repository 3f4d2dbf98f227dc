#include "ertk/erindex.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <utility>

#include "json.hpp"

#include "ertk/util.hpp"

namespace ertk {
namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'E', 'R', 'I', 'X'};
constexpr std::uint32_t kFormatVersion = 1;

enum Section : std::uint8_t {
  kSectionPostings = 1,
  kSectionUnits = 2,
  kSectionGroups = 3,
  kSectionStats = 4,
};

struct SectionFile {
  const char* name;
  Section section;
  bool entity;  // false selects the pair partition
};

// Fixed layout of an index directory; load never walks manifest-supplied
// paths. Groups precede units because stored units name their group by
// ordinal into the sorted group sequence.
constexpr std::array<SectionFile, 8> kSectionFiles = {{
    {"entity.postings.bin", kSectionPostings, true},
    {"entity.groups.bin", kSectionGroups, true},
    {"entity.units.bin", kSectionUnits, true},
    {"entity.stats.bin", kSectionStats, true},
    {"pair.postings.bin", kSectionPostings, false},
    {"pair.groups.bin", kSectionGroups, false},
    {"pair.units.bin", kSectionUnits, false},
    {"pair.stats.bin", kSectionStats, false},
}};

const std::vector<Posting> kNoPostings;

// ---------------------------------------------------------------------------
// Section framing: magic, version, section id, payload size, payload, then an
// FNV checksum of every preceding byte. The checksum makes any single-byte
// change detectable; the version check runs first so a genuine future file
// reports its version instead of a spurious checksum failure.

std::string frame_section(Section section, std::string_view payload) {
  std::string out;
  out.reserve(4 + 4 + 1 + 8 + payload.size() + 8);
  out.append(kMagic, sizeof(kMagic));
  put_u32le(out, kFormatVersion);
  out.push_back(static_cast<char>(section));
  put_u64le(out, payload.size());
  out.append(payload);
  put_u64le(out, fnv1a64(out));
  return out;
}

std::string_view unframe_section(std::string_view data, Section want,
                                 const std::string& name) {
  constexpr std::size_t kHeader = 4 + 4 + 1 + 8;
  if (data.size() < kHeader + 8)
    throw FormatError(name + ": truncated index file");
  if (std::memcmp(data.data(), kMagic, sizeof(kMagic)) != 0)
    throw FormatError(name + ": not an index section (bad magic)");
  std::size_t pos = sizeof(kMagic);
  const std::uint32_t version = get_u32le(data, pos);
  if (version != kFormatVersion)
    throw FormatError(name + ": index format version " +
                      std::to_string(version) +
                      " is not supported (this build reads version " +
                      std::to_string(kFormatVersion) + ")");
  std::size_t tail = data.size() - 8;
  const std::uint64_t stored = get_u64le(data, tail);
  if (fnv1a64(data.substr(0, data.size() - 8)) != stored)
    throw FormatError(name + ": checksum mismatch");
  const auto section = static_cast<std::uint8_t>(data[pos++]);
  if (section != want)
    throw FormatError(name + ": unexpected section id " +
                      std::to_string(section));
  const std::uint64_t payload_size = get_u64le(data, pos);
  if (payload_size != data.size() - pos - 8)
    throw FormatError(name + ": payload size disagrees with file size");
  return data.substr(pos, payload_size);
}

// ---------------------------------------------------------------------------
// Payload encodings. Strings are length-prefixed; id and position lists are
// delta-coded varints (sorted strictly ascending, so deltas after the first
// entry are nonzero).

std::string encode_postings(const IndexPartition& p) {
  std::string out;
  put_u64le(out, p.postings.size());
  for (const auto& [term, list] : p.postings) {
    put_string(out, term);
    put_uvarint(out, list.size());
    std::uint64_t prev_id = 0;
    for (const Posting& post : list) {
      put_uvarint(out, post.unit_id - prev_id);
      prev_id = post.unit_id;
      put_uvarint(out, post.positions.size());
      std::uint32_t prev_pos = 0;
      for (std::uint32_t q : post.positions) {
        put_uvarint(out, q - prev_pos);
        prev_pos = q;
      }
    }
  }
  return out;
}

void decode_postings(std::string_view payload, IndexPartition* p) {
  std::size_t pos = 0;
  const std::uint64_t n_terms = get_u64le(payload, pos);
  std::string prev_term;
  for (std::uint64_t t = 0; t < n_terms; ++t) {
    std::string term = get_string(payload, pos);
    if (t > 0 && term <= prev_term)
      throw FormatError("postings terms out of order");
    prev_term = term;
    const std::uint64_t n = get_uvarint(payload, pos);
    std::vector<Posting> list;
    list.reserve(n);
    std::uint64_t prev_id = 0;
    for (std::uint64_t i = 0; i < n; ++i) {
      const std::uint64_t delta = get_uvarint(payload, pos);
      if (i > 0 && delta == 0)
        throw FormatError("postings unit ids out of order");
      Posting post;
      post.unit_id = prev_id + delta;
      prev_id = post.unit_id;
      const std::uint64_t npos = get_uvarint(payload, pos);
      post.positions.reserve(npos);
      std::uint64_t prev_q = 0;
      for (std::uint64_t k = 0; k < npos; ++k) {
        const std::uint64_t d = get_uvarint(payload, pos);
        if (k > 0 && d == 0) throw FormatError("positions out of order");
        prev_q += d;
        if (prev_q > UINT32_MAX) throw FormatError("position overflows");
        post.positions.push_back(static_cast<std::uint32_t>(prev_q));
      }
      post.tf = static_cast<std::uint32_t>(post.positions.size());
      list.push_back(std::move(post));
    }
    p->postings.emplace_hint(p->postings.end(), std::move(term),
                             std::move(list));
  }
  if (pos != payload.size()) throw FormatError("trailing bytes after postings");
}

std::string encode_groups(const IndexPartition& p) {
  std::string out;
  put_u64le(out, p.groups.size());
  for (const auto& [key, g] : p.groups) {
    put_string(out, key.first);
    put_string(out, key.second);
    put_uvarint(out, g.total_length);
    put_uvarint(out, g.bigram_slots);
    put_uvarint(out, g.unit_ids.size());
    std::uint64_t prev = 0;
    for (std::uint64_t id : g.unit_ids) {
      put_uvarint(out, id - prev);
      prev = id;
    }
    put_uvarint(out, g.term_freq.size());
    for (const auto& [term, tf] : g.term_freq) {
      put_string(out, term);
      put_uvarint(out, tf);
    }
  }
  return out;
}

void decode_groups(std::string_view payload, IndexPartition* p,
                   std::vector<const UnitKey*>* ordinals) {
  std::size_t pos = 0;
  const std::uint64_t n_groups = get_u64le(payload, pos);
  UnitKey prev_key;
  for (std::uint64_t i = 0; i < n_groups; ++i) {
    UnitKey key;
    key.first = get_string(payload, pos);
    key.second = get_string(payload, pos);
    if (i > 0 && !(prev_key < key))
      throw FormatError("group keys out of order");
    prev_key = key;
    GroupProfile g;
    g.total_length = get_uvarint(payload, pos);
    g.bigram_slots = get_uvarint(payload, pos);
    const std::uint64_t n_units = get_uvarint(payload, pos);
    g.unit_ids.reserve(n_units);
    std::uint64_t prev = 0;
    for (std::uint64_t k = 0; k < n_units; ++k) {
      const std::uint64_t delta = get_uvarint(payload, pos);
      if (k > 0 && delta == 0) throw FormatError("group unit ids out of order");
      prev += delta;
      g.unit_ids.push_back(prev);
    }
    const std::uint64_t n_terms = get_uvarint(payload, pos);
    std::string prev_term;
    for (std::uint64_t k = 0; k < n_terms; ++k) {
      std::string term = get_string(payload, pos);
      if (k > 0 && term <= prev_term)
        throw FormatError("group terms out of order");
      const std::uint64_t tf = get_uvarint(payload, pos);
      prev_term = term;
      g.term_freq.emplace(std::move(term), tf);
    }
    auto it =
        p->groups.emplace_hint(p->groups.end(), std::move(key), std::move(g));
    ordinals->push_back(&it->first);
  }
  if (pos != payload.size()) throw FormatError("trailing bytes after groups");
}

std::string encode_units(const IndexPartition& p) {
  // Units reference their group by ordinal into the sorted group sequence.
  std::map<UnitKey, std::uint64_t> ordinal_of;
  std::uint64_t next = 0;
  for (const auto& [key, g] : p.groups) ordinal_of.emplace(key, next++);

  std::vector<std::pair<std::uint64_t, const UnitInfo*>> sorted;
  sorted.reserve(p.units.size());
  for (const auto& [id, info] : p.units) sorted.emplace_back(id, &info);
  std::sort(sorted.begin(), sorted.end());

  std::string out;
  put_u64le(out, sorted.size());
  for (const auto& [id, info] : sorted) {
    put_u64le(out, id);
    put_uvarint(out, ordinal_of.at(info->group));
    put_uvarint(out, info->length);
  }
  return out;
}

void decode_units(std::string_view payload, IndexPartition* p,
                  const std::vector<const UnitKey*>& ordinals) {
  std::size_t pos = 0;
  const std::uint64_t n_units = get_u64le(payload, pos);
  p->units.reserve(n_units);
  for (std::uint64_t i = 0; i < n_units; ++i) {
    const std::uint64_t id = get_u64le(payload, pos);
    const std::uint64_t ordinal = get_uvarint(payload, pos);
    if (ordinal >= ordinals.size())
      throw FormatError("unit references unknown group");
    const std::uint64_t length = get_uvarint(payload, pos);
    if (length > UINT32_MAX) throw FormatError("unit length overflows");
    UnitInfo info;
    info.group = *ordinals[ordinal];
    info.length = static_cast<std::uint32_t>(length);
    if (!p->units.emplace(id, std::move(info)).second)
      throw FormatError("duplicate unit id in stored index");
  }
  if (pos != payload.size()) throw FormatError("trailing bytes after units");
}

std::string encode_stats(const CollectionStats& s) {
  std::string out;
  put_u64le(out, s.total_terms);
  put_u64le(out, s.unit_count);
  put_u64le(out, s.group_count);
  put_u64le(out, s.bigram_slots_total);
  put_uvarint(out, s.term_cf.size());
  for (const auto& [term, cf] : s.term_cf) {
    put_string(out, term);
    put_uvarint(out, cf);
  }
  put_uvarint(out, s.bigram_cf.size());
  for (const auto& [bigram, cf] : s.bigram_cf) {
    put_string(out, bigram.first);
    put_string(out, bigram.second);
    put_uvarint(out, cf);
  }
  return out;
}

void decode_stats(std::string_view payload, CollectionStats* s) {
  std::size_t pos = 0;
  s->total_terms = get_u64le(payload, pos);
  s->unit_count = get_u64le(payload, pos);
  s->group_count = get_u64le(payload, pos);
  s->bigram_slots_total = get_u64le(payload, pos);
  const std::uint64_t n_terms = get_uvarint(payload, pos);
  for (std::uint64_t i = 0; i < n_terms; ++i) {
    std::string term = get_string(payload, pos);
    const std::uint64_t cf = get_uvarint(payload, pos);
    if (!s->term_cf.emplace(std::move(term), cf).second)
      throw FormatError("duplicate term in stats");
  }
  const std::uint64_t n_bigrams = get_uvarint(payload, pos);
  for (std::uint64_t i = 0; i < n_bigrams; ++i) {
    std::string a = get_string(payload, pos);
    std::string b = get_string(payload, pos);
    const std::uint64_t cf = get_uvarint(payload, pos);
    if (!s->bigram_cf.emplace(std::make_pair(std::move(a), std::move(b)), cf)
             .second)
      throw FormatError("duplicate bigram in stats");
  }
  if (pos != payload.size()) throw FormatError("trailing bytes after stats");
}

// ---------------------------------------------------------------------------
// Manifest

std::uint64_t compute_units_hash(const ERIndex& index) {
  std::vector<std::uint64_t> ids;
  ids.reserve(index.entity.units.size() + index.pair.units.size());
  for (const auto& [id, info] : index.entity.units) ids.push_back(id);
  for (const auto& [id, info] : index.pair.units) ids.push_back(id);
  std::sort(ids.begin(), ids.end());
  Fnv1a64 h;
  for (std::uint64_t id : ids) h.update_u64(id);
  return h.digest();
}

json counts_json(const IndexPartition& p) {
  return json{{"groups", p.groups.size()},
              {"units", p.units.size()},
              {"total_terms", p.stats.total_terms}};
}

void check_counts(const json& counts, const IndexPartition& p,
                  const char* which) {
  const auto want_groups = counts.at("groups").get<std::uint64_t>();
  const auto want_units = counts.at("units").get<std::uint64_t>();
  const auto want_terms = counts.at("total_terms").get<std::uint64_t>();
  if (want_groups != p.groups.size() || want_units != p.units.size() ||
      want_terms != p.stats.total_terms)
    throw FormatError(std::string(which) +
                      " counts disagree with the manifest");
}

std::uint64_t require_hex(const json& j, const char* what) {
  if (!j.is_string())
    throw FormatError(std::string("manifest field ") + what +
                      " must be a hex string");
  auto parsed = parse_hex64(j.get<std::string>());
  if (!parsed)
    throw FormatError(std::string("manifest field ") + what +
                      " is not 16 hex digits");
  return *parsed;
}

}  // namespace

// ---------------------------------------------------------------------------
// Lookups

const std::vector<Posting>& lookup_postings(const IndexPartition& partition,
                                            std::string_view term) {
  auto it = partition.postings.find(term);
  return it == partition.postings.end() ? kNoPostings : it->second;
}

const UnitKey* group_of(const IndexPartition& partition,
                        std::uint64_t unit_id) {
  auto it = partition.units.find(unit_id);
  return it == partition.units.end() ? nullptr : &it->second.group;
}

const GroupProfile* group_profile(const IndexPartition& partition,
                                  const UnitKey& key) {
  auto it = partition.groups.find(key);
  return it == partition.groups.end() ? nullptr : &it->second;
}

// ---------------------------------------------------------------------------
// Build

IndexBuilder::IndexBuilder(IndexConfig config) {
  index_.config = std::move(config);
}

void IndexBuilder::add(const ExtractionUnit& unit) {
  IndexPartition& p =
      unit.kind == UnitKind::Entity ? index_.entity : index_.pair;
  const auto length = static_cast<std::uint32_t>(unit.terms.size());

  UnitInfo info;
  info.group = unit.key;
  info.length = length;
  if (!p.units.emplace(unit.unit_id, std::move(info)).second)
    throw FormatError("duplicate unit id " + to_hex64(unit.unit_id) +
                      " (units must come from a single extraction run)");

  GroupProfile& g = p.groups[unit.key];
  g.unit_ids.push_back(unit.unit_id);
  g.total_length += length;
  if (length > 0) g.bigram_slots += length - 1;

  std::map<std::string_view, std::vector<std::uint32_t>> positions;
  for (std::uint32_t i = 0; i < length; ++i)
    positions[unit.terms[i]].push_back(i);
  for (const auto& [term, where] : positions) {
    Posting post;
    post.unit_id = unit.unit_id;
    post.tf = static_cast<std::uint32_t>(where.size());
    post.positions = where;
    // Lists are resorted by unit id in finish(), so add order cannot leak
    // into the index.
    auto it = p.postings.find(term);
    if (it == p.postings.end())
      it = p.postings.emplace(std::string(term), std::vector<Posting>()).first;
    g.term_freq[it->first] += post.tf;
    p.stats.term_cf[it->first] += post.tf;
    it->second.push_back(std::move(post));
  }

  p.stats.total_terms += length;
  p.stats.unit_count += 1;
  if (length > 0) p.stats.bigram_slots_total += length - 1;
  for (std::uint32_t i = 0; i + 1 < length; ++i)
    p.stats.bigram_cf[{unit.terms[i], unit.terms[i + 1]}] += 1;
}

ERIndex IndexBuilder::finish() {
  if (finished_) throw FormatError("finish() called twice on an IndexBuilder");
  finished_ = true;
  for (IndexPartition* p : {&index_.entity, &index_.pair}) {
    for (auto& [term, list] : p->postings)
      std::sort(list.begin(), list.end(),
                [](const Posting& a, const Posting& b) {
                  return a.unit_id < b.unit_id;
                });
    for (auto& [key, g] : p->groups)
      std::sort(g.unit_ids.begin(), g.unit_ids.end());
    p->stats.group_count = p->groups.size();
  }
  index_.units_hash = compute_units_hash(index_);
  return std::move(index_);
}

ERIndex build_index(const std::vector<ExtractionUnit>& units,
                    IndexConfig config) {
  IndexBuilder builder(std::move(config));
  for (const ExtractionUnit& unit : units) builder.add(unit);
  return builder.finish();
}

// ---------------------------------------------------------------------------
// Persistence

void save_index(const ERIndex& index, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);

  json files = json::object();
  std::vector<std::filesystem::path> written;
  try {
    for (const SectionFile& sf : kSectionFiles) {
      const IndexPartition& p = sf.entity ? index.entity : index.pair;
      std::string payload;
      switch (sf.section) {
        case kSectionPostings: payload = encode_postings(p); break;
        case kSectionUnits: payload = encode_units(p); break;
        case kSectionGroups: payload = encode_groups(p); break;
        case kSectionStats: payload = encode_stats(p.stats); break;
      }
      const std::string framed = frame_section(sf.section, payload);
      files[sf.name] = to_hex64(fnv1a64(framed));
      written.push_back(dir / sf.name);
      write_file(written.back(), framed);
    }

    json stopwords = json::array();
    {
      std::vector<std::string> sorted(
          index.config.extraction.tokenizer.stopwords.begin(),
          index.config.extraction.tokenizer.stopwords.end());
      std::sort(sorted.begin(), sorted.end());
      for (auto& s : sorted) stopwords.push_back(std::move(s));
    }
    json config{{"stopwords", std::move(stopwords)},
                {"max_pair_separation",
                 index.config.extraction.max_pair_separation
                     ? json(*index.config.extraction.max_pair_separation)
                     : json(nullptr)}};
    json manifest{{"format_version", kFormatVersion},
                  {"config", std::move(config)},
                  {"counts",
                   {{"entity", counts_json(index.entity)},
                    {"pair", counts_json(index.pair)}}},
                  {"units_hash", to_hex64(index.units_hash)},
                  {"files", std::move(files)}};
    const std::string text = manifest.dump(2) + "\n";
    written.push_back(dir / "manifest.json");
    write_file(written.back(), text);
    written.push_back(dir / "manifest.fnv");
    write_file(written.back(), to_hex64(fnv1a64(text)) + "\n");
  } catch (...) {
    // Do not leave a half-written index behind; a directory that exists must
    // be loadable.
    std::error_code ec;
    for (const auto& path : written) std::filesystem::remove(path, ec);
    throw;
  }
}

ERIndex load_index(const std::filesystem::path& dir) {
  const std::string manifest_text = read_file(dir / "manifest.json");
  if (read_file(dir / "manifest.fnv") !=
      to_hex64(fnv1a64(manifest_text)) + "\n")
    throw FormatError("manifest.json: checksum mismatch");

  json manifest;
  try {
    manifest = json::parse(manifest_text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("manifest.json: ") + e.what());
  }

  ERIndex index;
  try {
    if (!manifest.at("format_version").is_number_unsigned())
      throw FormatError("manifest format_version must be an unsigned integer");
    const auto version = manifest["format_version"].get<std::uint64_t>();
    if (version != kFormatVersion)
      throw FormatError("index format version " + std::to_string(version) +
                        " is not supported (this build reads version " +
                        std::to_string(kFormatVersion) + ")");

    const json& config = manifest.at("config");
    for (const auto& s : config.at("stopwords")) {
      if (!s.is_string()) throw FormatError("stopwords must be strings");
      index.config.extraction.tokenizer.stopwords.insert(
          s.get<std::string>());
    }
    const json& cutoff = config.at("max_pair_separation");
    if (cutoff.is_number_unsigned())
      index.config.extraction.max_pair_separation =
          cutoff.get<std::uint64_t>();
    else if (!cutoff.is_null())
      throw FormatError("max_pair_separation must be unsigned or null");

    const json& files = manifest.at("files");
    std::vector<const UnitKey*> entity_ordinals;
    std::vector<const UnitKey*> pair_ordinals;
    for (const SectionFile& sf : kSectionFiles) {
      const std::string data = read_file(dir / sf.name);
      const std::uint64_t want = require_hex(files.at(sf.name), sf.name);
      if (fnv1a64(data) != want)
        throw FormatError(std::string(sf.name) +
                          ": contents disagree with the manifest");
      const std::string_view payload = unframe_section(
          data, sf.section, sf.name);
      IndexPartition& p = sf.entity ? index.entity : index.pair;
      auto& ordinals = sf.entity ? entity_ordinals : pair_ordinals;
      try {
        switch (sf.section) {
          case kSectionPostings: decode_postings(payload, &p); break;
          case kSectionUnits: decode_units(payload, &p, ordinals); break;
          case kSectionGroups: decode_groups(payload, &p, &ordinals); break;
          case kSectionStats: decode_stats(payload, &p.stats); break;
        }
      } catch (const FormatError& e) {
        throw FormatError(std::string(sf.name) + ": " + e.what());
      }
    }

    check_counts(manifest.at("counts").at("entity"), index.entity, "entity");
    check_counts(manifest.at("counts").at("pair"), index.pair, "pair");
    index.units_hash = require_hex(manifest.at("units_hash"), "units_hash");
    if (compute_units_hash(index) != index.units_hash)
      throw FormatError("stored unit ids disagree with units_hash");
  } catch (const json::exception& e) {
    throw FormatError(std::string("manifest.json: ") + e.what());
  }
  return index;
}

}  // namespace ertk
