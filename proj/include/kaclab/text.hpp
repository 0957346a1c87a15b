#pragma once

#include <charconv>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace kaclab {

// Shortest round-trip decimal; output is locale-independent and stable, which
// the byte-identical report contract relies on.
inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  for (int prec = 1; prec < 17; ++prec) {
    char probe[40];
    std::snprintf(probe, sizeof probe, "%.*g", prec, x);
    double back = 0.0;
    auto [p, ec] = std::from_chars(probe, probe + std::char_traits<char>::length(probe), back);
    (void)p;
    if (ec == std::errc() && back == x) return probe;
  }
  return buf;
}

inline double parse_double(std::string_view s) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw std::invalid_argument("parse_double: bad number '" + std::string(s) + "'");
  }
  return v;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    std::size_t next = s.find(sep, pos);
    if (next == std::string_view::npos) {
      out.push_back(s.substr(pos));
      return out;
    }
    out.push_back(s.substr(pos, next - pos));
    pos = next + 1;
  }
}

// "key=value" -> {key, value}; throws if '=' is missing
inline std::pair<std::string_view, std::string_view> split_kv(std::string_view s) {
  std::size_t eq = s.find('=');
  if (eq == std::string_view::npos) {
    throw std::invalid_argument("expected key=value, got '" + std::string(s) + "'");
  }
  return {s.substr(0, eq), s.substr(eq + 1)};
}

}  // namespace kaclab
