#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "ertk/util.hpp"

namespace ertk {

// One linked entity mention: a byte span of the document text plus the
// canonical entity identifier it resolves to.
struct EntityAnnotation {
  std::string entity;
  std::uint32_t begin = 0;
  std::uint32_t end = 0;
  std::string surface;
};

struct AnnotatedDocument {
  std::string doc_id;
  std::string text;
  // Sorted by (begin, end, entity) after ingestion; spans are nested or
  // disjoint, never partially overlapping.
  std::vector<EntityAnnotation> annotations;
};

// Normalized token with the byte span it was cut from (absolute offsets into
// the document text, after edge punctuation was stripped).
struct Token {
  std::string term;
  std::uint32_t begin = 0;
  std::uint32_t end = 0;
};

struct Sentence {
  std::string doc_id;
  std::uint32_t sent_index = 0;
  std::uint32_t begin = 0;
  std::uint32_t end = 0;
  std::vector<Token> tokens;
};

struct TokenizerOptions {
  // Terms dropped after normalization. Empty (the default) keeps everything;
  // windowed scoring features work best with stopwords present.
  std::unordered_set<std::string> stopwords;
};

struct IngestConfig {
  // Throw on the first invalid record instead of skipping and reporting it.
  bool fail_fast = false;
};

struct IngestError {
  std::size_t line = 0;
  std::string message;
};

struct IngestReport {
  std::size_t lines = 0;      // input lines read (blank lines are skipped)
  std::size_t documents = 0;  // valid documents yielded
  std::vector<IngestError> errors;
};

// Parses and validates one corpus record. Normalizes annotation order and
// rejects bad offsets, non-boundary spans, surface mismatches, partially
// overlapping spans, and entity ids that would break the line-oriented run
// and qrels formats (whitespace or '|'). Extra fields such as confidence
// scores are accepted and ignored.
AnnotatedDocument parse_document_record(std::string_view line,
                                        std::size_t line_no = 0);

// Canonical serialization of a document record: stable key order, annotations
// in normalized order, ignored input fields gone. parse followed by
// canonical_record is the corpus round-trip.
std::string canonical_record(const AnnotatedDocument& doc);

// Streams documents out of a JSONL corpus file in file order.
class CorpusReader {
 public:
  explicit CorpusReader(const std::filesystem::path& path,
                        IngestConfig config = {});

  // Next valid document, or nullopt at end of input. Invalid records either
  // throw (fail_fast) or land in report().errors and are skipped.
  std::optional<AnnotatedDocument> next();

  // Complete once next() has returned nullopt.
  const IngestReport& report() const { return report_; }

 private:
  std::ifstream in_;
  std::string path_;
  IngestConfig config_;
  IngestReport report_;
  std::size_t line_no_ = 0;
  std::unordered_set<std::string> seen_ids_;
};

// Reads a whole corpus into memory. Error handling as with CorpusReader.
std::vector<AnnotatedDocument> load_corpus(const std::filesystem::path& path,
                                           IngestConfig config = {},
                                           IngestReport* out_report = nullptr);

// Splits text into sentences after '.', '!' or '?' followed by Unicode
// whitespace or end of text. No abbreviation handling on purpose: the rule is
// deterministic and lexicon-free, so "A. B! C?" is three sentences. Sentences
// are trimmed of surrounding whitespace; whitespace-only segments are
// dropped. Tokens are whitespace-separated runs with edge punctuation
// stripped, lowercased, empties dropped, stopwords removed per options.
std::vector<Sentence> segment_sentences(const AnnotatedDocument& doc,
                                        const TokenizerOptions& options = {});

// Annotations fully contained in [s.begin, s.end), in normalized order.
// Annotations straddling a sentence boundary belong to no sentence.
std::vector<EntityAnnotation> annotations_in_sentence(
    const AnnotatedDocument& doc, const Sentence& s);

// Number of annotations not fully contained in any sentence.
std::size_t count_straddling(const AnnotatedDocument& doc,
                             const std::vector<Sentence>& sentences);

// Applies the same normalization pipeline to free-standing text (queries,
// table cells): whitespace split, edge punctuation strip, lowercase,
// stopword removal. Returned terms carry no offsets.
std::vector<std::string> normalize_terms(std::string_view text,
                                         const TokenizerOptions& options = {});

}  // namespace ertk
