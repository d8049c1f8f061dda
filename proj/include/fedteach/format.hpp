#pragma once

#include <charconv>
#include <string>
#include <system_error>

namespace fedteach {

/// Shortest decimal text that parses back to exactly `value`.
inline std::string format_number(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) return "nan";
  return std::string(buf, end);
}

/// Fixed significant-digit text (%.{digits}g).
inline std::string format_sig(double value, int digits) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, digits);
  if (ec != std::errc()) return "nan";
  return std::string(buf, end);
}

}  // namespace fedteach
