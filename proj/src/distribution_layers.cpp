#include "motiontrim/distribution_layers.hpp"

#include <fmt/format.h>

#include <algorithm>

#include "motiontrim/error.hpp"

namespace motiontrim {

namespace {

void check_sizes(std::size_t x, std::size_t w, std::size_t out) {
  if (x != w || x != out) {
    throw Error(ErrorKind::SizeMismatch, fmt::format("layer operand sizes {} / {} / {}", x, w, out));
  }
  validate_bin_count(static_cast<int>(x));
}

// Row-major B x B table of product_bin, built once per bin count.
const int* product_bin_table(int b) {
  thread_local int cached_b = 0;
  thread_local std::vector<int> table;
  if (cached_b != b) {
    table.resize(static_cast<std::size_t>(b) * b);
    for (int i = 0; i < b; ++i) {
      for (int j = 0; j < b; ++j) table[static_cast<std::size_t>(i) * b + j] = product_bin(i, j, b);
    }
    cached_b = b;
  }
  return table.data();
}

}  // namespace

void sum_layer_forward(std::span<const double> x, std::span<const double> w, std::span<double> out) {
  check_sizes(x.size(), w.size(), out.size());
  const int b = static_cast<int>(x.size());
  const int c = (b - 1) / 2;
  std::fill(out.begin(), out.end(), 0.0);
  for (int i = 0; i < b; ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    // Shift k = i + j - c. Bins below 0 or above B-1 collapse onto the edges.
    const int j_lo = std::max(0, c - i);          // first j with k >= 0
    const int j_hi = std::min(b - 1, b - 1 + c - i);  // last j with k <= B-1
    double low = 0.0;
    for (int j = 0; j < j_lo; ++j) low += w[j];
    out[0] += xi * low;
    for (int j = j_lo; j <= j_hi; ++j) out[i + j - c] += xi * w[j];
    double high = 0.0;
    for (int j = j_hi + 1; j < b; ++j) high += w[j];
    out[b - 1] += xi * high;
  }
}

void product_layer_forward(std::span<const double> x, std::span<const double> w, std::span<double> out) {
  check_sizes(x.size(), w.size(), out.size());
  const int b = static_cast<int>(x.size());
  const int* bins = product_bin_table(b);
  std::fill(out.begin(), out.end(), 0.0);
  for (int i = 0; i < b; ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    const int* row = bins + static_cast<std::size_t>(i) * b;
    for (int j = 0; j < b; ++j) out[row[j]] += xi * w[j];
  }
}

void accumulate_sum_kernel_grad(std::span<const double> d_out, std::span<const double> x, std::span<double> d_kernel) {
  check_sizes(x.size(), d_kernel.size(), d_out.size());
  const int b = static_cast<int>(x.size());
  for (int i = 0; i < b; ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    for (int j = 0; j < b; ++j) d_kernel[j] += xi * d_out[sum_bin(i, j, b)];
  }
}

void accumulate_product_kernel_grad(std::span<const double> d_out, std::span<const double> x,
                                    std::span<double> d_kernel) {
  check_sizes(x.size(), d_kernel.size(), d_out.size());
  const int b = static_cast<int>(x.size());
  const int* bins = product_bin_table(b);
  for (int i = 0; i < b; ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    const int* row = bins + static_cast<std::size_t>(i) * b;
    for (int j = 0; j < b; ++j) d_kernel[j] += xi * d_out[row[j]];
  }
}

Histogram sum_layer_forward(const Histogram& x, const DistKernel& w) {
  Histogram out(x.size());
  sum_layer_forward(x.bins, w.weights, out.bins);
  return out;
}

Histogram product_layer_forward(const Histogram& x, const DistKernel& w) {
  Histogram out(x.size());
  product_layer_forward(x.bins, w.weights, out.bins);
  return out;
}

namespace {

template <typename BinFn>
GradBundle backward(std::span<const double> d_out, const Histogram& x, const DistKernel& w, BinFn bin) {
  check_sizes(x.bins.size(), w.weights.size(), d_out.size());
  const int b = x.size();
  GradBundle g{std::vector<double>(b, 0.0), std::vector<double>(b, 0.0)};
  for (int i = 0; i < b; ++i) {
    for (int j = 0; j < b; ++j) {
      const double up = d_out[bin(i, j, b)];
      g.d_kernel[j] += x.bins[i] * up;
      g.d_input[i] += w.weights[j] * up;
    }
  }
  return g;
}

}  // namespace

GradBundle sum_layer_backward(std::span<const double> d_out, const Histogram& x, const DistKernel& w) {
  return backward(d_out, x, w, sum_bin);
}

GradBundle product_layer_backward(std::span<const double> d_out, const Histogram& x, const DistKernel& w) {
  return backward(d_out, x, w, product_bin);
}

}  // namespace motiontrim
