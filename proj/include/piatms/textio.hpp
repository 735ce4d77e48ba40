#pragma once

#include <cctype>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace piatms {

/// Parse failure in a line-oriented input file; message carries file:line.
struct ParseError : std::runtime_error {
  ParseError(const std::string& file, int line, const std::string& what)
      : std::runtime_error(file + ":" + std::to_string(line) + ": " + what),
        file(file), line(line) {}
  std::string file;
  int line;
};

namespace textio {

inline std::string strip(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

inline std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.push_back(std::string(s.substr(i, j - i)));
    i = j;
  }
  return out;
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t p = s.find(sep, start);
    out.push_back(std::string(s.substr(start, p == std::string_view::npos ? std::string_view::npos
                                                                          : p - start)));
    if (p == std::string_view::npos) break;
    start = p + 1;
  }
  return out;
}

/// Splits "key=value"; returns false if there is no '='.
inline bool split_kv(std::string_view s, std::string& key, std::string& value) {
  std::size_t eq = s.find('=');
  if (eq == std::string_view::npos) return false;
  key = std::string(s.substr(0, eq));
  value = std::string(s.substr(eq + 1));
  return !key.empty();
}

inline bool parse_int(std::string_view s, long long& out) {
  if (s.empty()) return false;
  std::size_t i = s[0] == '-' ? 1 : 0;
  if (i == s.size()) return false;
  long long v = 0;
  for (; i < s.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    v = v * 10 + (s[i] - '0');
  }
  out = s[0] == '-' ? -v : v;
  return true;
}

}  // namespace textio
}  // namespace piatms
