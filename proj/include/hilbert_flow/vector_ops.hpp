#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "hilbert_flow/errors.hpp"

namespace hflow {

// One particle's parameters. All reductions below run sequentially in index
// order so results are bit-reproducible.
using ParamVector = std::vector<double>;

inline void require_same_size(const ParamVector& a, const ParamVector& b, const char* what) {
  if (a.size() != b.size()) {
    throw ArgumentError(std::string(what) + ": dimension mismatch (" + std::to_string(a.size()) +
                        " vs " + std::to_string(b.size()) + ")");
  }
}

inline double dot(const ParamVector& a, const ParamVector& b) {
  require_same_size(a, b, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double squared_norm(const ParamVector& a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return s;
}

inline double norm(const ParamVector& a) { return std::sqrt(squared_norm(a)); }

inline double squared_distance(const ParamVector& a, const ParamVector& b) {
  require_same_size(a, b, "squared_distance");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

inline ParamVector add(const ParamVector& a, const ParamVector& b) {
  require_same_size(a, b, "add");
  ParamVector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

inline ParamVector subtract(const ParamVector& a, const ParamVector& b) {
  require_same_size(a, b, "subtract");
  ParamVector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

inline ParamVector scaled(const ParamVector& a, double c) {
  ParamVector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = c * a[i];
  return out;
}

// y += c * x
inline void axpy(double c, const ParamVector& x, ParamVector& y) {
  require_same_size(x, y, "axpy");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += c * x[i];
}

inline bool all_finite(const ParamVector& a) {
  for (double v : a) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

inline bool is_zero(const ParamVector& a) {
  for (double v : a) {
    if (v != 0.0) return false;
  }
  return true;
}

// Relative L2 error ||a - b|| / max(||b||, floor). The floor keeps the ratio
// meaningful when the reference is (near) zero.
inline double relative_l2_error(const ParamVector& a, const ParamVector& b, double floor = 1e-12) {
  const double denom = std::max(norm(b), floor);
  return std::sqrt(squared_distance(a, b)) / denom;
}

}  // namespace hflow
