#pragma once

// Internal helpers shared by the serializers: shortest round-trip double
// formatting (keeps CSV/JSON output byte-stable) and small string utilities.

#include <charconv>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "minishrink/errors.hpp"

namespace minishrink::text {

inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

inline std::vector<std::string> split(std::string_view s, char delim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = s.find(delim, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(s.substr(start));
      break;
    }
    out.emplace_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

inline std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    std::size_t start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t' && s[i] != '\r') ++i;
    if (i > start) out.emplace_back(s.substr(start, i - start));
  }
  return out;
}

// numeric token possibly containing thousands separators ("583,000")
inline double parse_number(std::string_view token, const char* what) {
  std::string clean;
  clean.reserve(token.size());
  for (char c : token)
    if (c != ',') clean.push_back(c);
  double v = 0;
  auto [ptr, ec] = std::from_chars(clean.data(), clean.data() + clean.size(), v);
  if (ec != std::errc() || ptr != clean.data() + clean.size())
    throw ParseError(std::string(what) + ": bad number '" + std::string(token) + "'");
  return v;
}

}  // namespace minishrink::text
