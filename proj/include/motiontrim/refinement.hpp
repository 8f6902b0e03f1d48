#pragma once

#include "motiontrim/image.hpp"

namespace motiontrim {

struct RefineParams {
  double sigma_spatial = 3.0;  // pixels
  double sigma_color = 15.0;   // intensity levels
  int radius = 5;
  int max_iters = 5;
  int min_flips = 10;  // stop once an iteration flips fewer labels than this
};

struct RefineResult {
  BinaryMask mask;
  int iterations = 0;
};

/// Iterative neighborhood relabeling. Each pass weighs every neighbor q in the
/// (2r+1)^2 window (excluding p, truncated at borders) by
///   exp(-(I(p)-I(q))^2 / 2 sigma_c^2) * exp(-|p-q|^2 / 2 sigma_s^2)
/// and labels p foreground iff the foreground weight strictly exceeds the
/// background weight. Passes are synchronous.
RefineResult refine_detailed(const BinaryMask& mask, const Frame& frame, const RefineParams& params = {});

BinaryMask refine(const BinaryMask& mask, const Frame& frame, const RefineParams& params = {});

}  // namespace motiontrim
