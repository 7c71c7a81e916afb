#pragma once

#include <charconv>
#include <string>
#include <system_error>

#include "ccgan/errors.hpp"

namespace ccgan {

/// Shortest round-trip decimal form, independent of the process locale.
inline std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw NumericError("failed to format a decimal value");
  return std::string(buf, ptr);
}

}  // namespace ccgan
