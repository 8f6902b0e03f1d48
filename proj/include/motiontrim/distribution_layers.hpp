#pragma once

#include <span>
#include <vector>

#include "motiontrim/histogram.hpp"

namespace motiontrim {

/// Learnable histogram-shaped weights on the same [-1, 1] grid as the input.
/// Values are unconstrained reals.
struct DistKernel {
  std::vector<double> weights;

  int size() const { return static_cast<int>(weights.size()); }
};

struct GradBundle {
  std::vector<double> d_input;
  std::vector<double> d_kernel;
};

/// Output bin of x_i + w_j, clamped to the domain.
inline int sum_bin(int i, int j, int bin_count) {
  const int k = i + j - (bin_count - 1) / 2;
  return k < 0 ? 0 : (k >= bin_count ? bin_count - 1 : k);
}

/// Output bin of x_i * w_j: round((x_i w_j + 1)/2 * (B-1)), halves rounded up.
/// Exact: with c = (B-1)/2 the coordinate is (c^2 + (i-c)(j-c)) / c.
inline int product_bin(int i, int j, int bin_count) {
  const long c = (bin_count - 1) / 2;
  const long n = c * c + static_cast<long>(i - c) * (j - c);
  return static_cast<int>((2 * n + c) / (2 * c));
}

// Span forms write into `out` (overwritten, size B). They skip zero input bins,
// which leaves results unchanged and makes sparse feature histograms cheap.
void sum_layer_forward(std::span<const double> x, std::span<const double> w, std::span<double> out);
void product_layer_forward(std::span<const double> x, std::span<const double> w, std::span<double> out);

/// d_kernel[j] += sum_i x[i] * d_out[bin(i, j)], skipping zero x[i].
void accumulate_sum_kernel_grad(std::span<const double> d_out, std::span<const double> x, std::span<double> d_kernel);
void accumulate_product_kernel_grad(std::span<const double> d_out, std::span<const double> x,
                                    std::span<double> d_kernel);

Histogram sum_layer_forward(const Histogram& x, const DistKernel& w);
Histogram product_layer_forward(const Histogram& x, const DistKernel& w);

/// Exact adjoint of the forward accumulation with the bin mapping held fixed.
GradBundle sum_layer_backward(std::span<const double> d_out, const Histogram& x, const DistKernel& w);
GradBundle product_layer_backward(std::span<const double> d_out, const Histogram& x, const DistKernel& w);

}  // namespace motiontrim
