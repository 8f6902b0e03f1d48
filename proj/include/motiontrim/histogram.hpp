#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "motiontrim/image.hpp"

namespace motiontrim {

/// B-bin discrete distribution on the fixed grid [-1, 1], step 2/(B-1).
/// B is odd so that value 0 owns the center bin (B-1)/2.
struct Histogram {
  std::vector<double> bins;

  Histogram() = default;
  explicit Histogram(int bin_count);

  int size() const { return static_cast<int>(bins.size()); }
  double& operator[](int k) { return bins[static_cast<std::size_t>(k)]; }
  double operator[](int k) const { return bins[static_cast<std::size_t>(k)]; }
  double mass() const;

  static Histogram delta(int bin_count, int bin);

  bool operator==(const Histogram&) const = default;
};

inline constexpr int kDefaultBins = 201;

/// Throws SizeMismatch unless B >= 3 and odd.
void validate_bin_count(int bin_count);
inline int center_bin(int bin_count) { return (bin_count - 1) / 2; }
/// Grid value of bin k: -1 + k * 2/(B-1).
double grid_value(int bin, int bin_count);

/// Bin of the normalized difference diff/255, diff in [-255, 255].
/// round((d+1)/2 * (B-1)) with halves rounded up (the coordinate is never negative),
/// evaluated in integer arithmetic so ties are exact.
int difference_bin(int diff, int bin_count);

struct TemporalWindow {
  int length = 100;  // L, number of preceding frames
};

/// Histogram of (I_t(p) - I_{t-i}(p))/255 for i = 1..L, each contributing 1/L.
/// `frames` must be single-channel.
Histogram diff_histogram(std::span<const Frame> frames, int x, int y, std::size_t t, TemporalWindow window,
                         int bin_count = kDefaultBins);

/// Same as diff_histogram but accumulates into a caller-owned buffer of size B.
void diff_histogram_into(std::span<const Frame> frames, int x, int y, std::size_t t, TemporalWindow window,
                         std::span<double> out);

/// One histogram per pixel, row-major.
struct HistogramGrid {
  int width = 0;
  int height = 0;
  int bin_count = 0;
  std::vector<double> data;  // (y * width + x) * B + k

  std::span<const double> at(int x, int y) const {
    return {data.data() + (static_cast<std::size_t>(y) * width + x) * bin_count, static_cast<std::size_t>(bin_count)};
  }
};

HistogramGrid infer_histograms(std::span<const Frame> frames, std::size_t t, TemporalWindow window,
                               int bin_count = kDefaultBins);

/// Plain-text dump: one `x y b0 ... b{B-1}` line per pixel.
void write_histogram_dump(const HistogramGrid& grid, std::ostream& out);

struct PixelSample {
  Histogram histogram;
  Label label = Label::Background;
  int x = 0;
  int y = 0;
  std::size_t frame = 0;
};

/// Ground truth for one frame of the sequence.
struct LabeledFrame {
  std::size_t frame = 0;
  BinaryMask mask;
};

struct SampleSet {
  std::vector<PixelSample> samples;
  std::size_t foreground = 0;
  std::size_t background = 0;
  /// Set when the foreground pool could not fill half of the request.
  bool insufficient_foreground = false;
};

/// Draws n labeled pixels, half foreground and half background where available,
/// from labeled frames with at least L frames of history. Deterministic per seed.
SampleSet sample_training_set(std::span<const Frame> frames, std::span<const LabeledFrame> ground_truth,
                              std::size_t n, std::uint64_t seed, TemporalWindow window,
                              int bin_count = kDefaultBins);

}  // namespace motiontrim
