#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace gtsim {

using Vec = std::vector<double>;

// Small dense helpers used throughout the round updates. All loops are
// plain and contiguous; the vectors involved are parameter-sized.

inline void fill_zero(std::span<double> x) {
  for (double& v : x) v = 0.0;
}

// y += a * x
inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

// y = a * x
inline void scale_into(double a, std::span<const double> x,
                       std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = a * x[i];
}

inline double dot(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

inline double squared_norm(std::span<const double> x) { return dot(x, x); }

inline double norm(std::span<const double> x) {
  return std::sqrt(squared_norm(x));
}

inline double max_abs(std::span<const double> x) {
  double m = 0.0;
  for (double v : x) {
    double a = v < 0 ? -v : v;
    if (a > m) m = a;
  }
  return m;
}

inline double max_abs_diff(std::span<const double> x,
                           std::span<const double> y) {
  double m = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double d = x[i] - y[i];
    if (d < 0) d = -d;
    if (d > m) m = d;
  }
  return m;
}

}  // namespace gtsim
