#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "motiontrim/image.hpp"
#include "motiontrim/trimmer.hpp"

namespace motiontrim {

inline constexpr int kDefaultSegments = 32;
inline constexpr int kBuiltinFeatureDim = 20;

/// S x D row-major feature matrix, one row per temporal segment.
struct SegmentFeatures {
  int segments = 0;
  int dims = 0;
  std::vector<double> values;

  std::span<const double> row(int s) const {
    return {values.data() + static_cast<std::size_t>(s) * dims, static_cast<std::size_t>(dims)};
  }
};

enum class Polarity { Negative, Positive };

struct Bag {
  SegmentFeatures features;
  Polarity polarity = Polarity::Negative;
};

using ScoreSeries = std::vector<double>;

struct MilParams {
  double lambda1 = 8e-5;  // temporal smoothness
  double lambda2 = 8e-5;  // sparsity
  double learning_rate = 0.001;
  int epochs = 200;
  std::uint64_t seed = 1;
  int hidden1 = 512;
  int hidden2 = 32;
};

/// Inclusive frame ranges; the first n mod S segments are one frame longer.
std::vector<std::pair<std::size_t, std::size_t>> segment_video(std::size_t n_frames, int segments = kDefaultSegments);

/// 20-dim motion descriptor of frames [first, last]:
///   [0..15]  histogram of |I_{t+1} - I_t| / 255 over all pixels and consecutive
///            pairs, 16 equal bins on [0, 1], normalized to sum 1
///   [16..18] mean, population std and max of per-pair mean |difference| / 255
///   [19]     mean foreground ratio over the range (0 without masks)
/// `masks`, when non-empty, is aligned with `frames`.
std::vector<double> builtin_features(std::span<const Frame> frames, std::pair<std::size_t, std::size_t> range,
                                     std::span<const BinaryMask> masks = {});

SegmentFeatures video_features(std::span<const Frame> frames, int segments = kDefaultSegments,
                               std::span<const BinaryMask> masks = {});

/// Comma-separated, one row per segment, no header.
SegmentFeatures parse_features(const std::string& text, int expected_segments = kDefaultSegments);
SegmentFeatures load_features(const std::filesystem::path& path, int expected_segments = kDefaultSegments);
std::string features_text(const SegmentFeatures& features);

/// Fully connected D -> H1 -> H2 -> 1 scorer with ReLU hidden layers and a
/// logistic output. Flat layout: W1 (H1 x D), b1, W2 (H2 x H1), b2, W3 (H2), b3.
class MilNetwork {
 public:
  MilNetwork() = default;
  MilNetwork(int dims, int hidden1, int hidden2);  // zero weights

  static MilNetwork initialized(int dims, int hidden1, int hidden2, std::uint64_t seed);

  int dims() const { return dims_; }
  int hidden1() const { return h1_; }
  int hidden2() const { return h2_; }
  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }
  std::size_t offset_b1() const { return static_cast<std::size_t>(h1_) * dims_; }
  std::size_t offset_w2() const { return offset_b1() + h1_; }
  std::size_t offset_b2() const { return offset_w2() + static_cast<std::size_t>(h2_) * h1_; }
  std::size_t offset_w3() const { return offset_b2() + h2_; }
  std::size_t offset_b3() const { return offset_w3() + h2_; }

  /// Pre-sigmoid output for one segment.
  double logit(std::span<const double> x) const;
  double score(std::span<const double> x) const;
  /// Adds d(score)/d(params) * upstream to grads.
  void accumulate_gradient(std::span<const double> x, double upstream, std::span<double> grads) const;

  bool operator==(const MilNetwork&) const = default;

 private:
  int dims_ = 0;
  int h1_ = 0;
  int h2_ = 0;
  std::vector<double> params_;
};

ScoreSeries score_forward(const SegmentFeatures& features, const MilNetwork& net);

/// max(0, 1 - max(pos) + max(neg)) + lambda1 * sum (pos_i - pos_{i+1})^2 + lambda2 * sum pos_i
double mil_ranking_loss(std::span<const double> pos, std::span<const double> neg, double lambda1, double lambda2);
double mil_hinge(std::span<const double> pos, std::span<const double> neg);

struct MilTrainResult {
  MilNetwork network;
  std::vector<double> loss_history;   // mean total loss per epoch
  std::vector<double> hinge_history;  // mean hinge term per epoch
};

/// Each epoch shuffles the positive and negative bags (seeded) and pairs them
/// round-robin for max(#pos, #neg) steps, one Adagrad step per pair.
MilTrainResult train_mil(std::span<const Bag> bags, const MilParams& params);

/// `mil-weights 2 D H1 H2 N` header line followed by N little-endian doubles.
std::string mil_weights_bytes(const MilNetwork& net);
MilNetwork parse_mil_weights(const std::string& bytes);
void save_mil_weights(const MilNetwork& net, const std::filesystem::path& path);
MilNetwork load_mil_weights(const std::filesystem::path& path);

/// Header `segment,score`, then `i,score` rows with 6 decimals.
std::string scores_csv(const ScoreSeries& scores);
ScoreSeries parse_scores_csv(const std::string& text);
/// 640x320 polyline chart of score vs segment, y ticks at 0, 0.5 and 1.
std::string scores_svg(const ScoreSeries& scores);

/// Scores the features and writes `<prefix>.csv` and `<prefix>.svg`.
ScoreSeries score_video(const SegmentFeatures& features, const MilNetwork& net, const std::filesystem::path& out_prefix);

/// Spearman correlation with average ranks; 0 when either side is constant.
double spearman(std::span<const double> a, std::span<const double> b);

/// Pairs each trimmed segment with the full-video segment containing the
/// original index of its middle frame, then rank-correlates the pairs.
double compare_graphs(const ScoreSeries& full, const ScoreSeries& trimmed, const TrimSegmentMap& map,
                      std::size_t full_n_frames);

}  // namespace motiontrim
