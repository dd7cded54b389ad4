#pragma once

#include <cstdio>
#include <cstdlib>
#include <string>

namespace kpirefine {

// Shortest round-trippable decimal (up to 17 significant digits).
inline std::string format_decimal(double v) {
  char buf[32];
  for (int digits = 9; digits <= 17; ++digits) {
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

}  // namespace kpirefine
