#include "causalembed/serialize.hpp"

#include <cstdio>
#include <cstdlib>
#include <istream>

#include "causalembed/errors.hpp"

namespace causalembed {

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

double parse_double(const std::string& token, const std::string& context) {
  if (token.empty()) {
    throw DataFormatError(context + ": empty numeric field");
  }
  char* end = nullptr;
  const double value = std::strtod(token.c_str(), &end);
  if (end != token.c_str() + token.size()) {
    throw DataFormatError(context + ": malformed number '" + token + "'");
  }
  return value;
}

std::string fnv1a_hex(std::span<const char> bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (char c : bytes) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(hash));
  return buf;
}

std::string fnv1a_hex(const std::string& text) {
  return fnv1a_hex(std::span<const char>(text.data(), text.size()));
}

LineReader::LineReader(std::istream& in, std::string source)
    : in_(in), source_(std::move(source)) {}

bool LineReader::next_line(std::string& out) {
  while (std::getline(in_, out)) {
    ++line_;
    if (!out.empty() && out.back() == '\r') out.pop_back();
    return true;
  }
  return false;
}

std::string LineReader::expect_line(const std::string& what) {
  std::string line;
  while (next_line(line)) {
    if (!line.empty()) return line;
  }
  throw DataFormatError(source_ + ": unexpected end of input, expected " +
                        what);
}

}  // namespace causalembed
