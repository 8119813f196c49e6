#pragma once

#include <algorithm>
#include <cmath>

namespace diqkd {

// x log2(x) with the 0 log 0 = 0 convention.
inline double xlog2x(double x) {
  return x > 0.0 ? x * std::log2(x) : 0.0;
}

// Binary entropy in bits; exact 0 at the endpoints. Tiny negative arguments
// from roundoff are clamped.
inline double binary_entropy_bits(double x) {
  x = std::clamp(x, 0.0, 1.0);
  if (x == 0.0 || x == 1.0) return 0.0;
  return -xlog2x(x) - xlog2x(1.0 - x);
}

}  // namespace diqkd
