#include "motiontrim/histogram.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <numeric>
#include <ostream>
#include <random>

#include "motiontrim/error.hpp"

namespace motiontrim {

Histogram::Histogram(int bin_count) : bins(static_cast<std::size_t>(bin_count), 0.0) {}

double Histogram::mass() const { return std::accumulate(bins.begin(), bins.end(), 0.0); }

Histogram Histogram::delta(int bin_count, int bin) {
  Histogram h(bin_count);
  h[bin] = 1.0;
  return h;
}

void validate_bin_count(int bin_count) {
  if (bin_count < 3 || bin_count % 2 == 0) {
    throw Error(ErrorKind::SizeMismatch, fmt::format("bin count {} must be odd and >= 3", bin_count));
  }
}

double grid_value(int bin, int bin_count) {
  const int c = center_bin(bin_count);
  return static_cast<double>(bin - c) / c;
}

int difference_bin(int diff, int bin_count) {
  // (d+1)/2 * (B-1) = (diff + 255) * (B-1) / 510; round half up.
  const long num = static_cast<long>(diff + 255) * (bin_count - 1);
  return static_cast<int>((2 * num + 510) / 1020);
}

namespace {

void check_pixel_window(std::span<const Frame> frames, int x, int y, std::size_t t, TemporalWindow window) {
  if (window.length < 1) throw Error(ErrorKind::InsufficientHistory, "window length must be >= 1");
  if (t >= frames.size()) throw Error(ErrorKind::IndexOutOfRange, fmt::format("frame {} of {}", t, frames.size()));
  if (t < static_cast<std::size_t>(window.length)) {
    throw Error(ErrorKind::InsufficientHistory, fmt::format("frame {} has fewer than {} predecessors", t, window.length));
  }
  const Frame& cur = frames[t];
  if (x < 0 || y < 0 || x >= cur.width || y >= cur.height) {
    throw Error(ErrorKind::OutOfBounds, fmt::format("pixel ({}, {}) outside {}x{}", x, y, cur.width, cur.height));
  }
}

}  // namespace

void diff_histogram_into(std::span<const Frame> frames, int x, int y, std::size_t t, TemporalWindow window,
                         std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  const int bin_count = static_cast<int>(out.size());
  const int current = frames[t].at(x, y);
  // Integer counts first so a constant pixel yields an exact 1.0.
  for (int i = 1; i <= window.length; ++i) {
    const int past = frames[t - static_cast<std::size_t>(i)].at(x, y);
    out[static_cast<std::size_t>(difference_bin(current - past, bin_count))] += 1.0;
  }
  const double l = window.length;
  for (double& v : out)
    if (v != 0.0) v /= l;
}

Histogram diff_histogram(std::span<const Frame> frames, int x, int y, std::size_t t, TemporalWindow window,
                         int bin_count) {
  validate_bin_count(bin_count);
  check_pixel_window(frames, x, y, t, window);
  Histogram h(bin_count);
  diff_histogram_into(frames, x, y, t, window, h.bins);
  return h;
}

HistogramGrid infer_histograms(std::span<const Frame> frames, std::size_t t, TemporalWindow window, int bin_count) {
  validate_bin_count(bin_count);
  check_pixel_window(frames, 0, 0, t, window);
  HistogramGrid grid;
  grid.width = frames[t].width;
  grid.height = frames[t].height;
  grid.bin_count = bin_count;
  grid.data.assign(frames[t].pixel_count() * static_cast<std::size_t>(bin_count), 0.0);
  for (int y = 0; y < grid.height; ++y) {
    for (int x = 0; x < grid.width; ++x) {
      const std::size_t offset = (static_cast<std::size_t>(y) * grid.width + x) * bin_count;
      diff_histogram_into(frames, x, y, t, window, std::span<double>(grid.data).subspan(offset, bin_count));
    }
  }
  return grid;
}

void write_histogram_dump(const HistogramGrid& grid, std::ostream& out) {
  for (int y = 0; y < grid.height; ++y) {
    for (int x = 0; x < grid.width; ++x) {
      out << x << ' ' << y;
      for (double b : grid.at(x, y)) fmt::print(out, " {}", b);
      out << '\n';
    }
  }
}

SampleSet sample_training_set(std::span<const Frame> frames, std::span<const LabeledFrame> ground_truth,
                              std::size_t n, std::uint64_t seed, TemporalWindow window, int bin_count) {
  validate_bin_count(bin_count);
  struct Candidate {
    std::size_t frame;
    int x;
    int y;
  };
  std::vector<Candidate> fg_pool;
  std::vector<Candidate> bg_pool;
  for (const auto& gt : ground_truth) {
    if (gt.frame < static_cast<std::size_t>(window.length) || gt.frame >= frames.size()) continue;
    const Frame& f = frames[gt.frame];
    if (gt.mask.width != f.width || gt.mask.height != f.height) {
      throw Error(ErrorKind::DimensionMismatch, fmt::format("ground truth for frame {} does not match frame size", gt.frame));
    }
    for (int y = 0; y < f.height; ++y) {
      for (int x = 0; x < f.width; ++x) {
        (gt.mask.foreground(x, y) ? fg_pool : bg_pool).push_back({gt.frame, x, y});
      }
    }
  }
  if (fg_pool.empty() && bg_pool.empty()) {
    throw Error(ErrorKind::NoEligibleFrames, fmt::format("no labeled frame has {} frames of history", window.length));
  }

  SampleSet result;
  std::size_t fg_quota = n / 2;
  if (fg_pool.size() < fg_quota) {
    fg_quota = fg_pool.size();
    result.insufficient_foreground = true;
  }
  const std::size_t bg_quota = std::min(n - fg_quota, bg_pool.size());

  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates: the first `count` entries become a uniform draw without replacement.
  auto draw = [&rng](std::vector<Candidate>& pool, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
      std::swap(pool[i], pool[pick(rng)]);
    }
    pool.resize(count);
  };
  draw(fg_pool, fg_quota);
  draw(bg_pool, bg_quota);

  auto emit = [&](const Candidate& c, Label label) {
    PixelSample s;
    s.histogram = diff_histogram(frames, c.x, c.y, c.frame, window, bin_count);
    s.label = label;
    s.x = c.x;
    s.y = c.y;
    s.frame = c.frame;
    result.samples.push_back(std::move(s));
  };
  for (std::size_t i = 0; i < std::max(fg_quota, bg_quota); ++i) {
    if (i < fg_quota) emit(fg_pool[i], Label::Foreground);
    if (i < bg_quota) emit(bg_pool[i], Label::Background);
  }
  result.foreground = fg_quota;
  result.background = bg_quota;
  return result;
}

}  // namespace motiontrim
