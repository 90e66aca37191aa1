#pragma once

#include <cmath>
#include <numbers>

#include "cnslab/field.hpp"
#include "cnslab/spectral.hpp"

namespace testing {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline double max_abs_diff(const cns::ScalarField& a, const cns::ScalarField& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

inline double max_abs(const cns::ScalarField& a) {
  double m = 0.0;
  for (double x : a.values()) m = std::max(m, std::abs(x));
  return m;
}

inline double max_abs(const cns::VectorField& v) { return std::max(max_abs(v.x), max_abs(v.y)); }

inline double max_abs_diff(const cns::VectorField& a, const cns::VectorField& b) {
  return std::max(max_abs_diff(a.x, b.x), max_abs_diff(a.y, b.y));
}

}  // namespace testing
