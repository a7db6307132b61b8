#pragma once

#include <charconv>
#include <string>

namespace isodiff {

// Shortest round-trip decimal form; keeps written tables byte-stable and
// reparse-exact.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace isodiff
