#pragma once

#include <algorithm>
#include <cmath>

namespace kpirefine::detail {

inline constexpr double kExpArgLimit = 708.0;

inline double clamped_exp(double x) noexcept {
  return std::exp(std::clamp(x, -kExpArgLimit, kExpArgLimit));
}

// exp(-|x|) never overflows, and the negative branch avoids 1 - tiny.
inline double sigmoid(double x) noexcept {
  const double e = std::exp(-std::min(std::abs(x), kExpArgLimit));
  const double r = 1.0 / (1.0 + e);
  return x >= 0.0 ? r : e * r;
}

}  // namespace kpirefine::detail
