#include <random>
#include <sstream>

#include "doctest.h"
#include "motiontrim/error.hpp"
#include "motiontrim/histogram.hpp"
#include "oracles.hpp"

using namespace motiontrim;

namespace {

std::vector<Frame> random_sequence(std::mt19937_64& rng, int w, int h, int n, int lo = 0, int hi = 255) {
  std::uniform_int_distribution<int> u(lo, hi);
  std::vector<Frame> frames;
  for (int i = 0; i < n; ++i) {
    Frame f(w, h, 1);
    for (auto& v : f.data) v = static_cast<std::uint8_t>(u(rng));
    frames.push_back(std::move(f));
  }
  return frames;
}

// Textbook histogram with floating-point differences.
std::vector<double> oracle_histogram(const std::vector<Frame>& frames, int x, int y, std::size_t t, int l, int b) {
  std::vector<double> out(b, 0.0);
  for (int i = 1; i <= l; ++i) {
    const double d = (static_cast<double>(frames[t].at(x, y)) - frames[t - i].at(x, y)) / 255.0;
    out[oracle::bin_of(d, b)] += 1.0 / l;
  }
  return out;
}

ErrorKind kind_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::IoError;
}

}  // namespace

TEST_CASE("bin indices of the extremes and zero") {
  for (int b : {3, 5, 21, 201}) {
    CHECK(difference_bin(0, b) == (b - 1) / 2);
    CHECK(difference_bin(255, b) == b - 1);
    CHECK(difference_bin(-255, b) == 0);
  }
  for (int d = -255; d <= 255; ++d)
    for (int b : {5, 21, 201}) REQUIRE(difference_bin(d, b) == oracle::bin_of(d / 255.0, b));
}

TEST_CASE("diff_histogram examples") {
  SUBCASE("constant history is a center delta") {
    std::vector<Frame> frames(11, Frame(3, 3, 1, 77));
    const Histogram h = diff_histogram(frames, 1, 2, 10, {10});
    CHECK(h == Histogram::delta(201, 100));
  }
  SUBCASE("full positive difference lands in the top bin") {
    std::vector<Frame> frames{Frame(1, 1, 1, 0), Frame(1, 1, 1, 255)};
    CHECK(diff_histogram(frames, 0, 0, 1, {1}) == Histogram::delta(201, 200));
  }
  SUBCASE("hand-worked B=5 case") {
    // history [128, 0]: d1 = 0 -> bin 2; d2 = 128/255 -> round(1.502/2*4) = 3
    std::vector<Frame> frames{Frame(1, 1, 1, 0), Frame(1, 1, 1, 128), Frame(1, 1, 1, 128)};
    const Histogram h = diff_histogram(frames, 0, 0, 2, {2}, 5);
    CHECK(h.bins == std::vector<double>{0, 0, 0.5, 0.5, 0});
  }
}

TEST_CASE("diff_histogram errors") {
  std::vector<Frame> frames(5, Frame(4, 4, 1, 0));
  CHECK(kind_of([&] { diff_histogram(frames, 0, 0, 2, {3}); }) == ErrorKind::InsufficientHistory);
  CHECK(kind_of([&] { diff_histogram(frames, 4, 0, 4, {3}); }) == ErrorKind::OutOfBounds);
  CHECK(kind_of([&] { diff_histogram(frames, 0, -1, 4, {3}); }) == ErrorKind::OutOfBounds);
  CHECK(kind_of([&] { diff_histogram(frames, 0, 0, 4, {3}, 4); }) == ErrorKind::SizeMismatch);
}

TEST_CASE("diff_histogram matches the floating-point oracle") {
  std::mt19937_64 rng(11);
  const auto frames = random_sequence(rng, 6, 5, 40);
  for (int b : {5, 21, 201}) {
    for (int trial = 0; trial < 20; ++trial) {
      const int x = static_cast<int>(rng() % 6), y = static_cast<int>(rng() % 5);
      const int l = 1 + static_cast<int>(rng() % 30);
      const std::size_t t = l + rng() % (40 - l);
      const Histogram h = diff_histogram(frames, x, y, t, {l}, b);
      const auto expect = oracle_histogram(frames, x, y, t, l, b);
      for (int k = 0; k < b; ++k) REQUIRE(h[k] == doctest::Approx(expect[k]).epsilon(1e-12));
    }
  }
}

TEST_CASE("feature histogram properties") {
  std::mt19937_64 rng(5);
  const auto frames = random_sequence(rng, 4, 4, 60, 20, 200);

  SUBCASE("non-negative and unit mass") {
    for (std::size_t t = 30; t < 60; ++t) {
      const Histogram h = diff_histogram(frames, 1, 1, t, {30});
      CHECK(std::abs(h.mass() - 1.0) <= 1e-9);
      for (double v : h.bins) CHECK(v >= 0.0);
    }
  }
  SUBCASE("invariant to a constant intensity shift") {
    auto shifted = frames;
    for (auto& f : shifted)
      for (auto& v : f.data) v = static_cast<std::uint8_t>(v + 40);
    for (std::size_t t = 30; t < 60; t += 7) CHECK(diff_histogram(frames, 2, 3, t, {30}) == diff_histogram(shifted, 2, 3, t, {30}));
  }
  SUBCASE("history order does not matter") {
    auto swapped = frames;
    std::swap(swapped[25], swapped[40]);
    std::swap(swapped[30], swapped[31]);
    CHECK(diff_histogram(frames, 0, 0, 50, {30}) == diff_histogram(swapped, 0, 0, 50, {30}));
  }
}

TEST_CASE("infer_histograms") {
  SUBCASE("static 2x2 gives four center deltas") {
    std::vector<Frame> frames(4, Frame(2, 2, 1, 10));
    const HistogramGrid g = infer_histograms(frames, 3, {3}, 21);
    for (int y = 0; y < 2; ++y)
      for (int x = 0; x < 2; ++x) {
        const auto h = g.at(x, y);
        CHECK(std::vector<double>(h.begin(), h.end()) == Histogram::delta(21, 10).bins);
      }
  }
  SUBCASE("agrees with the scalar operation") {
    std::mt19937_64 rng(9);
    const auto frames = random_sequence(rng, 7, 6, 25);
    const HistogramGrid g = infer_histograms(frames, 24, {20});
    for (int i = 0; i < 5; ++i) {
      const int x = static_cast<int>(rng() % 7), y = static_cast<int>(rng() % 6);
      const auto h = g.at(x, y);
      CHECK(std::vector<double>(h.begin(), h.end()) == diff_histogram(frames, x, y, 24, {20}).bins);
    }
  }
  SUBCASE("t = L-1 is rejected") {
    std::vector<Frame> frames(10, Frame(2, 2, 1, 0));
    CHECK(kind_of([&] { infer_histograms(frames, 4, {5}); }) == ErrorKind::InsufficientHistory);
  }
}

TEST_CASE("histogram dump format") {
  std::vector<Frame> frames(2, Frame(2, 1, 1, 0));
  std::ostringstream out;
  write_histogram_dump(infer_histograms(frames, 1, {1}, 3), out);
  CHECK(out.str() == "0 0 0 1 0\n1 0 0 1 0\n");
}

TEST_CASE("sample_training_set") {
  std::mt19937_64 rng(2);
  const auto frames = random_sequence(rng, 8, 8, 20);
  BinaryMask mixed(8, 8);
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 8; ++x) mixed.set(x, y, Label::Foreground);
  const std::vector<LabeledFrame> gt{{2, mixed}, {12, mixed}, {15, mixed}};

  SUBCASE("stratified") {
    const SampleSet s = sample_training_set(frames, gt, 4, 1, {10}, 21);
    CHECK(s.samples.size() == 4);
    CHECK(s.foreground == 2);
    CHECK(s.background == 2);
    CHECK_FALSE(s.insufficient_foreground);
    for (const auto& p : s.samples) {
      CHECK(p.frame >= 10);
      CHECK(mixed.foreground(p.x, p.y) == (p.label == Label::Foreground));
      CHECK(p.histogram == diff_histogram(frames, p.x, p.y, p.frame, {10}, 21));
    }
  }
  SUBCASE("deterministic per seed") {
    const SampleSet a = sample_training_set(frames, gt, 50, 7, {10}, 21);
    const SampleSet b = sample_training_set(frames, gt, 50, 7, {10}, 21);
    const SampleSet c = sample_training_set(frames, gt, 50, 8, {10}, 21);
    REQUIRE(a.samples.size() == b.samples.size());
    bool differs = false;
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
      CHECK(a.samples[i].histogram == b.samples[i].histogram);
      CHECK(a.samples[i].x == b.samples[i].x);
      CHECK(a.samples[i].y == b.samples[i].y);
      CHECK(a.samples[i].frame == b.samples[i].frame);
      differs |= a.samples[i].x != c.samples[i].x || a.samples[i].y != c.samples[i].y ||
                  a.samples[i].frame != c.samples[i].frame;
    }
    CHECK(differs);
  }
  SUBCASE("all-background ground truth falls back") {
    const std::vector<LabeledFrame> bg{{12, BinaryMask(8, 8)}};
    const SampleSet s = sample_training_set(frames, bg, 10, 1, {10}, 21);
    CHECK(s.insufficient_foreground);
    CHECK(s.samples.size() == 10);
    CHECK(s.foreground == 0);
    CHECK(s.background == 10);
  }
  SUBCASE("no frame with enough history") {
    const std::vector<LabeledFrame> early{{3, mixed}};
    CHECK(kind_of([&] { sample_training_set(frames, early, 10, 1, {10}, 21); }) == ErrorKind::NoEligibleFrames);
  }
}
