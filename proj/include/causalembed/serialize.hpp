#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>

namespace causalembed {

// Formats a double with 17 significant digits, which round-trips to the
// identical bit pattern through strtod.
std::string format_double(double value);

// Strict double parse; throws DataFormatError on trailing garbage.
double parse_double(const std::string& token, const std::string& context);

// FNV-1a 64-bit hash, returned as 16 hex characters.
std::string fnv1a_hex(std::span<const char> bytes);
std::string fnv1a_hex(const std::string& text);

// Line-oriented reader with error context.
class LineReader {
 public:
  explicit LineReader(std::istream& in, std::string source = "<stream>");
  // Next non-empty line; throws DataFormatError at end of input.
  std::string expect_line(const std::string& what);
  bool next_line(std::string& out);
  std::size_t line_number() const { return line_; }
  const std::string& source() const { return source_; }

 private:
  std::istream& in_;
  std::string source_;
  std::size_t line_ = 0;
};

}  // namespace causalembed
