#pragma once

#include <cstdio>
#include <string>

namespace orars::detail {

// Shortest text that always round-trips a double: 17 significant digits.
inline void append_real(std::string& out, double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof(buf), "%.17g", v);
  out.append(buf, static_cast<std::size_t>(n));
}

inline std::string real_to_string(double v) {
  std::string s;
  append_real(s, v);
  return s;
}

}  // namespace orars::detail
