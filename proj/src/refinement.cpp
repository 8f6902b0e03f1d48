#include "motiontrim/refinement.hpp"

#include <fmt/format.h>

#include <array>
#include <cmath>
#include <vector>

#include "motiontrim/error.hpp"

namespace motiontrim {

RefineResult refine_detailed(const BinaryMask& mask, const Frame& frame, const RefineParams& params) {
  if (mask.width != frame.width || mask.height != frame.height) {
    throw Error(ErrorKind::DimensionMismatch, fmt::format("mask {}x{} vs frame {}x{}", mask.width, mask.height,
                                                          frame.width, frame.height));
  }
  if (frame.channels != 1) throw Error(ErrorKind::UnsupportedFormat, "refine needs a luminance frame");
  if (!(params.sigma_spatial > 0.0) || !(params.sigma_color > 0.0) || params.radius < 1 || params.max_iters < 1) {
    throw Error(ErrorKind::ConfigError, "invalid refinement parameters");
  }

  const int r = params.radius;
  const int side = 2 * r + 1;
  std::vector<double> spatial(static_cast<std::size_t>(side) * side);
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      spatial[static_cast<std::size_t>(dy + r) * side + (dx + r)] =
          std::exp(-(dx * dx + dy * dy) / (2.0 * params.sigma_spatial * params.sigma_spatial));
    }
  }
  std::array<double, 256> color{};
  for (int d = 0; d < 256; ++d) color[d] = std::exp(-(d * d) / (2.0 * params.sigma_color * params.sigma_color));

  RefineResult result{mask, 0};
  BinaryMask next = mask;
  for (int iter = 0; iter < params.max_iters; ++iter) {
    const BinaryMask& cur = result.mask;
    int flips = 0;
    for (int y = 0; y < frame.height; ++y) {
      for (int x = 0; x < frame.width; ++x) {
        const int ip = frame.at(x, y);
        double w_fg = 0.0;
        double w_bg = 0.0;
        for (int qy = std::max(0, y - r); qy <= std::min(frame.height - 1, y + r); ++qy) {
          for (int qx = std::max(0, x - r); qx <= std::min(frame.width - 1, x + r); ++qx) {
            if (qx == x && qy == y) continue;
            const double g = color[std::abs(ip - frame.at(qx, qy))] *
                             spatial[static_cast<std::size_t>(qy - y + r) * side + (qx - x + r)];
            (cur.foreground(qx, qy) ? w_fg : w_bg) += g;
          }
        }
        const Label l = w_fg > w_bg ? Label::Foreground : Label::Background;
        next.set(x, y, l);
        if (cur.foreground(x, y) != (l == Label::Foreground)) ++flips;
      }
    }
    std::swap(result.mask, next);
    result.iterations = iter + 1;
    if (flips < params.min_flips) break;
  }
  return result;
}

BinaryMask refine(const BinaryMask& mask, const Frame& frame, const RefineParams& params) {
  return refine_detailed(mask, frame, params).mask;
}

}  // namespace motiontrim
