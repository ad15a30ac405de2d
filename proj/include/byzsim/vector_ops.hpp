#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "byzsim/errors.hpp"

namespace byzsim {

// A worker update (stochastic gradient, momentum, or MVR estimate).
using Vector = std::vector<double>;

inline Vector zeros(std::size_t n) { return Vector(n, 0.0); }

inline bool all_finite(const Vector& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

inline void check_same_size(const Vector& a, const Vector& b) {
  if (a.size() != b.size())
    throw UsageError("vector size mismatch: " + std::to_string(a.size()) +
                     " vs " + std::to_string(b.size()));
}

inline void add_in_place(Vector& y, const Vector& x) {
  check_same_size(y, x);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += x[i];
}

// y += a * x
inline void axpy(Vector& y, double a, const Vector& x) {
  check_same_size(y, x);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

inline Vector scaled(const Vector& x, double a) {
  Vector y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = a * x[i];
  return y;
}

inline Vector subtract(const Vector& a, const Vector& b) {
  check_same_size(a, b);
  Vector y(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) y[i] = a[i] - b[i];
  return y;
}

inline double dot(const Vector& a, const Vector& b) {
  check_same_size(a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double squared_norm(const Vector& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

inline double norm(const Vector& v) { return std::sqrt(squared_norm(v)); }

inline double squared_distance(const Vector& a, const Vector& b) {
  check_same_size(a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

// Coordinate-wise arithmetic mean. Summation runs in ascending list order;
// callers keep the list in worker-index order so runs are bit-reproducible.
inline Vector mean_of(const std::vector<Vector>& vectors) {
  if (vectors.empty()) throw UsageError("mean of empty vector list");
  const std::size_t d = vectors.front().size();
  Vector out(d, 0.0);
  for (const Vector& v : vectors) {
    if (v.size() != d) throw UsageError("mean over ragged vector lengths");
    for (std::size_t j = 0; j < d; ++j) out[j] += v[j];
  }
  const double inv = 1.0 / static_cast<double>(vectors.size());
  for (double& x : out) x *= inv;
  return out;
}

inline bool lexicographic_less(const Vector& a, const Vector& b) {
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i] < b[i]) return true;
    if (a[i] > b[i]) return false;
  }
  return a.size() < b.size();
}

}  // namespace byzsim
