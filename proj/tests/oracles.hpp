#pragma once

// Independent reference computations used only by tests. They follow the
// textbook definitions with floating-point grid values instead of the
// integer bin arithmetic used by the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace oracle {

inline double grid(int k, int b) { return -1.0 + 2.0 * k / (b - 1); }

// Bin of a value in [-1, 1]: round((v + 1) / 2 * (B - 1)), halves up. The
// nudge absorbs floating error; genuine fractional parts are at least 1/(B-1)
// away from a half.
inline int bin_of(double v, int b) {
  v = std::clamp(v, -1.0, 1.0);
  const long double coord = (static_cast<long double>(v) + 1.0L) / 2.0L * (b - 1);
  return static_cast<int>(std::floor(coord + 0.5L + 1e-9L));
}

inline std::vector<double> naive_sum(const std::vector<double>& x, const std::vector<double>& w) {
  const int b = static_cast<int>(x.size());
  std::vector<double> out(b, 0.0);
  for (int i = 0; i < b; ++i)
    for (int j = 0; j < b; ++j) out[bin_of(grid(i, b) + grid(j, b), b)] += x[i] * w[j];
  return out;
}

inline std::vector<double> naive_product(const std::vector<double>& x, const std::vector<double>& w) {
  const int b = static_cast<int>(x.size());
  std::vector<double> out(b, 0.0);
  for (int i = 0; i < b; ++i)
    for (int j = 0; j < b; ++j) out[bin_of(grid(i, b) * grid(j, b), b)] += x[i] * w[j];
  return out;
}

inline std::vector<double> random_vector(std::mt19937_64& rng, int n, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double sum(const std::vector<double>& a) {
  double s = 0.0;
  for (double v : a) s += v;
  return s;
}

}  // namespace oracle
