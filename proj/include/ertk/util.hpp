#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ertk {

// Fatal I/O problems (missing file, unreadable directory, disk full).
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input data. Carries a 1-based line number when one is known.
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& msg, std::size_t line = 0)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + msg : msg),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_ = 0;
};

// ---------------------------------------------------------------------------
// Hashing

class Fnv1a64 {
 public:
  void update(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      hash_ ^= p[i];
      hash_ *= 0x100000001b3ULL;
    }
  }
  void update(std::string_view s) { update(s.data(), s.size()); }
  void update_u8(std::uint8_t v) { update(&v, 1); }
  void update_u32(std::uint32_t v);
  void update_u64(std::uint64_t v);
  std::uint64_t digest() const { return hash_; }

 private:
  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

std::uint64_t fnv1a64(std::string_view data);
std::string to_hex64(std::uint64_t v);
std::optional<std::uint64_t> parse_hex64(std::string_view s);

// ---------------------------------------------------------------------------
// Deterministic RNG (used for sampling; identical sequences on every platform,
// unlike std::shuffle / std::uniform_int_distribution).

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  // Uniform value in [0, n) via Lemire's multiply-shift reduction.
  std::uint64_t bounded(std::uint64_t n);

 private:
  std::uint64_t state_;
};

template <typename T>
void deterministic_shuffle(std::vector<T>& v, SplitMix64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.bounded(i));
    using std::swap;
    swap(v[i - 1], v[j]);
  }
}

// ---------------------------------------------------------------------------
// UTF-8

// Decoded code point with the byte range it occupies.
struct CodePoint {
  char32_t cp;
  std::uint32_t begin;
  std::uint32_t end;
};

bool validate_utf8(std::string_view s);
std::vector<CodePoint> decode_utf8(std::string_view s);
// True if `idx` is 0, s.size(), or the start of a UTF-8 sequence.
bool is_char_boundary(std::string_view s, std::size_t idx);
std::size_t count_code_points(std::string_view s);

bool is_unicode_space(char32_t cp);
// Punctuation stripped from token edges: ASCII punctuation plus common
// typographic marks (quotes, dashes, ellipsis, guillemets, inverted marks).
bool is_edge_punct(char32_t cp);

std::string ascii_lower(std::string_view s);

// ---------------------------------------------------------------------------
// Binary encoding: unsigned LEB128 varints and fixed-width little-endian ints.

void put_uvarint(std::string& out, std::uint64_t v);
std::uint64_t get_uvarint(std::string_view buf, std::size_t& pos);
void put_u64le(std::string& out, std::uint64_t v);
std::uint64_t get_u64le(std::string_view buf, std::size_t& pos);
void put_u32le(std::string& out, std::uint32_t v);
std::uint32_t get_u32le(std::string_view buf, std::size_t& pos);
void put_string(std::string& out, std::string_view s);
std::string get_string(std::string_view buf, std::size_t& pos);

// ---------------------------------------------------------------------------
// Files

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view data);

// ---------------------------------------------------------------------------
// Misc

std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, char sep);
std::string format_double(double v, int precision = 6);

}  // namespace ertk
